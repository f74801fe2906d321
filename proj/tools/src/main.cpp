#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <numeric>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <kfree/asymptotics.hpp>
#include <kfree/diffraction.hpp>
#include <kfree/sieve.hpp>
#include <kfree/special_values.hpp>

using nlohmann::json;
using namespace kfree;

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct GridSpec {
    double start = 0, stop = 0;
    int points = 0;
};

GridSpec parse_grid(const std::string& s) {
    GridSpec g;
    char extra;
    if (std::sscanf(s.c_str(), "%lf:%lf:%d%c", &g.start, &g.stop, &g.points, &extra) != 3 ||
        g.points < 1 || !(g.start > 0) || !(g.stop >= g.start))
        throw CLI::ValidationError("grid", "expected start:stop:points with 0 < start <= stop");
    return g;
}

std::vector<double> expand_grid(const GridSpec& g, bool log_spaced) {
    std::vector<double> xs;
    if (g.points == 1) return {g.start};
    for (int i = 0; i < g.points; ++i) {
        double f = static_cast<double>(i) / (g.points - 1);
        xs.push_back(log_spaced ? g.start * std::pow(g.stop / g.start, f)
                                : g.start + f * (g.stop - g.start));
    }
    return xs;
}

struct Options {
    uint64_t sieve_limit = 100'000'000;
    unsigned threads = std::thread::hardware_concurrency();
    std::string format = "json";
    std::string output;
};

void emit(const Options& opt, const std::string& text) {
    if (opt.output.empty()) {
        std::cout << text;
    } else {
        std::ofstream f(opt.output, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open output file " + opt.output);
        f << text;
    }
}

std::shared_ptr<const SieveTables> make_tables(const Options& opt, uint64_t needed) {
    if (needed > opt.sieve_limit)
        throw std::length_error("needs sieve limit " + std::to_string(needed) +
                                " > --sieve-limit " + std::to_string(opt.sieve_limit));
    return std::make_shared<SieveTables>(SieveTables::build(needed));
}

json tb_json(const TailBounded& t) { return {{"value", t.value}, {"tail", t.tail}}; }

json intensity_json(const IntensityResult& r) {
    return {{"k", r.k},           {"method", r.method}, {"epsilon", r.epsilon},
            {"N", r.N},           {"q_max", r.q_max},   {"b_max", r.b_max},
            {"t_max", r.t_max},   {"value", tb_json(r.value)}};
}

int require_k_arg(int k) {
    if (k < 2) {
        std::cerr << "k must be >= 2\n";
        return 2;
    }
    return 0;
}

// ---- verify suites ----------------------------------------------------------

struct CheckLog {
    json checks = json::array();
    bool all_pass = true;
    void add(const std::string& name, bool pass, const std::string& detail) {
        checks.push_back({{"name", name}, {"pass", pass}, {"detail", detail}});
        all_pass = all_pass && pass;
        std::fprintf(stderr, "  [%s] %s  %s\n", pass ? "ok" : "FAIL", name.c_str(),
                     detail.c_str());
    }
};

void check_constant_identity(CheckLog& log, const std::vector<int>& ks) {
    for (int k : ks) {
        auto c = constants_for_k(k);
        double z = zeta_real(2.0 - 1.0 / k, 1e-16).value;
        double lhs = c.gamma_k.value * c.xi_k.value * z / (2 * k - 1);
        double rhs = c.c_k.value / (2 * k);
        double diff = std::abs(lhs - rhs);
        log.add("constant-identity k=" + std::to_string(k), diff <= 1e-12,
                "|diff|=" + fmt17(diff));
    }
}

void check_resummation(CheckLog& log, const DiffractionContext& ctx, int k, uint64_t n_max) {
    double worst = 0;
    bool pass = true;
    for (uint64_t N = 1; N <= n_max; ++N) {
        auto a = ctx.ztilde_definition(k, N);
        auto b = ctx.ztilde_via_zk(k, N);
        double excess = std::abs(a.value.value - b.value.value) - (a.value.tail + b.value.tail);
        worst = std::max(worst, excess);
        pass = pass && consistent(a.value, b.value);
    }
    log.add("resummation k=" + std::to_string(k) + " N<=" + std::to_string(n_max), pass,
            "worst excess=" + fmt17(worst));
}

void check_sandwich(CheckLog& log, const DiffractionContext& ctx, int k,
                    const std::vector<double>& epsilons) {
    bool pass = true;
    int bad = 0;
    for (double e : epsilons) {
        auto rep = ctx.sandwich_check(k, e);
        if (!rep.verdict) {
            pass = false;
            ++bad;
        }
    }
    log.add("sandwich k=" + std::to_string(k) + " (" + std::to_string(epsilons.size()) +
                " epsilons)",
            pass, std::to_string(bad) + " violations");
}

void check_cross_form(CheckLog& log, const DiffractionContext& ctx, int k,
                      const std::vector<uint64_t>& cs, uint64_t r_max, uint64_t d_max) {
    bool pass = true;
    double worst = 0;
    for (uint64_t c : cs) {
        auto a = ctx.zk_definition(k, c, r_max, d_max);
        auto b = ctx.zk_factorised(k, c);
        worst = std::max(worst, std::abs(a.value - b.value) - (a.tail + b.tail));
        pass = pass && consistent(a, b);
    }
    log.add("cross-form k=" + std::to_string(k), pass, "worst excess=" + fmt17(worst));
}

void check_convolution(CheckLog& log, uint64_t n_max, uint64_t a_max) {
    bool pass = true;
    for (uint64_t a = 1; a <= a_max && pass; ++a)
        for (uint64_t n = 1; n <= n_max && pass; ++n) {
            int lhs = (mobius(n) != 0 && std::gcd(n, a) == 1) ? 1 : 0;
            int rhs = 0;
            for (uint64_t c = 1; c * c <= n; ++c) {
                if (n % c) continue;
                uint64_t d = n / c;
                rhs += g_weight(c, a) * (mobius(d) != 0 ? 1 : 0);
                if (c != d) rhs += g_weight(d, a) * (mobius(c) != 0 ? 1 : 0);
            }
            if (lhs != rhs) pass = false;
        }
    log.add("convolution n<=" + std::to_string(n_max) + " a<=" + std::to_string(a_max), pass,
            pass ? "exact" : "mismatch found");
}

void check_walfisz(CheckLog& log) {
    std::vector<double> grid;
    for (int i = 0; i <= 25; ++i) grid.push_back(1e3 * std::pow(10.0, 5.0 * i / 25));
    auto rs = walfisz_residuals(grid);
    double full = 0, top = 0;
    for (size_t i = 0; i < rs.x.size(); ++i) {
        double r = std::abs(rs.normalized[i]);
        full = std::max(full, r);
        if (rs.x[i] >= 1e7) top = std::max(top, r);
    }
    log.add("walfisz-normalized-residual", full <= 1.0 && top <= 2.0 * full,
            "max=" + fmt17(full) + " top-decade=" + fmt17(top));
}

PowerLawFit lattice_fit(const DiffractionContext& ctx, int k, double n_lo, double n_hi,
                        int points) {
    std::set<uint64_t> ns;
    for (int i = 0; i < points; ++i)
        ns.insert(static_cast<uint64_t>(
            std::llround(n_lo * std::pow(n_hi / n_lo, static_cast<double>(i) / (points - 1)))));
    std::vector<std::pair<double, double>> pts;
    for (auto it = ns.rbegin(); it != ns.rend(); ++it)  // increasing epsilon
        pts.emplace_back(1.0 / static_cast<double>(*it),
                         ctx.ztilde_via_zk(k, *it).value.value);
    return fit_power_law(pts);
}

void check_power_law(CheckLog& log, const DiffractionContext& ctx) {
    auto f2 = lattice_fit(ctx, 2, 1e2, 1e4, 201);
    double amp_rel = f2.amplitude() / (ctx.constants(2).c_k.value / 4) - 1;
    log.add("power-law k=2", std::abs(f2.exponent - 1.5) <= 0.02 && std::abs(amp_rel) <= 0.05,
            "exponent=" + fmt17(f2.exponent) + " amp_rel=" + fmt17(amp_rel));
    auto f3 = lattice_fit(ctx, 3, 1e4, 1e6, 201);
    log.add("power-law k=3", std::abs(f3.exponent - 5.0 / 3.0) <= 0.02,
            "exponent=" + fmt17(f3.exponent));
}

void check_ratio_decay(CheckLog& log, const DiffractionContext& ctx) {
    std::vector<uint64_t> cs{100, 1'000'000};
    auto rs = zk_asymptotic_check(ctx, 2, cs);
    double d_small = std::abs(rs.exact[0] / rs.main_term[0] - 1);
    double d_large = std::abs(rs.exact[1] / rs.main_term[1] - 1);
    log.add("zk-ratio-decay k=2", d_large < d_small,
            "dev(1e2)=" + fmt17(d_small) + " dev(1e6)=" + fmt17(d_large));
}

void check_section3(CheckLog& log) {
    bool decreasing = true;
    double prev = 0, first = 0, last = 0;
    for (int k = 2; k <= 12; ++k) {
        double d = std::abs(constants_for_k(k).c_k.value - 1.0);
        if (k == 2)
            first = d;
        else if (d >= prev)
            decreasing = false;
        prev = d;
        last = d;
    }
    log.add("ck-to-one", decreasing && last < first / 4,
            "|c2-1|=" + fmt17(first) + " |c12-1|=" + fmt17(last));
}

int run_verify(const Options& opt, const std::string& level) {
    CheckLog log;
    std::fprintf(stderr, "verify --level %s\n", level.c_str());
    if (level == "quick") {
        auto tables = make_tables(opt, 1'000'000);
        DiffractionContext ctx(tables);
        check_constant_identity(log, {2, 3});
        check_resummation(log, ctx, 2, 10);
        check_sandwich(log, ctx, 2, {0.137});
        check_sandwich(log, ctx, 3, {0.01});
        check_cross_form(log, ctx, 2, {1, 2}, 20'000, 2'000);
        check_convolution(log, 2'000, 20);
    } else {
        auto tables = make_tables(opt, 2'000'000);
        DiffractionContext ctx(tables);
        check_constant_identity(log, {2, 3, 4, 5, 8, 10});
        check_resummation(log, ctx, 2, 50);
        check_resummation(log, ctx, 3, 50);
        std::mt19937_64 rng(12345);
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        std::vector<double> eps2, eps3;
        for (int i = 0; i < 100; ++i)
            eps2.push_back(1e-3 * std::pow(0.9 / 1e-3, uni(rng)));
        for (int i = 0; i < 100; ++i)
            eps3.push_back(1e-3 * std::pow(0.9 / 1e-3, uni(rng)));
        check_sandwich(log, ctx, 2, eps2);
        check_sandwich(log, ctx, 3, eps3);
        check_cross_form(log, ctx, 2, {1, 2, 3, 5}, 600'000, 10'000);
        check_convolution(log, 10'000, 50);
        check_walfisz(log);
        check_power_law(log, ctx);
        check_ratio_decay(log, ctx);
        check_section3(log);
    }
    json out = {{"level", level}, {"pass", log.all_pass}, {"checks", log.checks}};
    emit(opt, out.dump(2) + "\n");
    if (!log.all_pass) {
        for (auto& c : log.checks)
            if (!c["pass"].get<bool>()) {
                std::cerr << "first failing identity: " << c["name"].get<std::string>() << "\n";
                break;
            }
        return 1;
    }
    return 0;
}

// ---- command bodies ---------------------------------------------------------

int run_constants(const Options& opt, int k, double tail) {
    if (int rc = require_k_arg(k)) return rc;
    auto c = constants_for_k(k, tail);
    json out = {{"k", k},
                {"target_tail", tail},
                {"xi_k", tb_json(c.xi_k)},
                {"gamma_k", tb_json(c.gamma_k)},
                {"c_k", tb_json(c.c_k)}};
    if (opt.format == "table") {
        std::ostringstream os;
        os << "k = " << k << "\n"
           << "xi_k    = " << fmt17(c.xi_k.value) << "  (tail " << fmt17(c.xi_k.tail) << ")\n"
           << "gamma_k = " << fmt17(c.gamma_k.value) << "  (tail " << fmt17(c.gamma_k.tail)
           << ")\n"
           << "c_k     = " << fmt17(c.c_k.value) << "  (tail " << fmt17(c.c_k.tail) << ")\n";
        emit(opt, os.str());
    } else {
        emit(opt, out.dump(2) + "\n");
    }
    return 0;
}

int run_intensity(const Options& opt, int k, double eps, uint64_t N, const std::string& method,
                  uint64_t q_max, uint64_t b_max, uint64_t t_max) {
    if (int rc = require_k_arg(k)) return rc;
    if ((eps > 0) == (N > 0)) {
        std::cerr << "exactly one of --eps and --N is required\n";
        return 2;
    }
    if (method != "direct" && method != "ztilde" && method != "via-zk") {
        std::cerr << "unknown method " << method << "\n";
        return 2;
    }
    if (method == "direct" && !(eps > 0)) {
        std::cerr << "--method direct requires --eps\n";
        return 2;
    }
    if (method != "direct" && !(N > 0)) {
        std::cerr << "--method " << method << " requires --N\n";
        return 2;
    }
    uint64_t needed = 1'000'000;
    if (method == "direct")
        needed = std::max<uint64_t>(
            q_max ? q_max : static_cast<uint64_t>(std::max(1e6, std::ceil(100.0 / eps))),
            needed);
    else if (method == "ztilde")
        needed = std::max<uint64_t>(q_max ? q_max : std::max<uint64_t>(1'000'000, 100 * N),
                                    needed);
    auto ctx = DiffractionContext(make_tables(opt, needed));

    IntensityResult r;
    if (method == "direct")
        r = ctx.z_direct(k, eps, q_max);
    else if (method == "ztilde")
        r = ctx.ztilde_definition(k, N, q_max);
    else
        r = ctx.ztilde_via_zk(k, N, b_max, t_max);
    if (opt.format == "csv") {
        std::ostringstream os;
        os << "epsilon,Z,tail,method\n"
           << fmt17(r.epsilon) << "," << fmt17(r.value.value) << "," << fmt17(r.value.tail)
           << "," << r.method << "\n";
        emit(opt, os.str());
    } else {
        emit(opt, intensity_json(r).dump(2) + "\n");
    }
    return 0;
}

int run_scan(const Options& opt, int k, const std::string& grid_spec, bool log_spaced,
             uint64_t q_max) {
    if (int rc = require_k_arg(k)) return rc;
    auto grid = expand_grid(parse_grid(grid_spec), log_spaced);
    uint64_t needed = q_max;
    for (double e : grid)
        needed = std::max(needed,
                          static_cast<uint64_t>(std::max(1e6, std::ceil(100.0 / e))));
    DiffractionContext ctx(make_tables(opt, needed));
    ctx.z_direct(k, grid.front(), q_max);  // build shared caches before fan-out

    std::vector<IntensityResult> results(grid.size());
    unsigned workers = std::max(1u, std::min<unsigned>(opt.threads, grid.size()));
    std::vector<std::thread> pool;
    std::atomic<size_t> cursor{0};
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (size_t i; (i = cursor.fetch_add(1)) < grid.size();)
                results[i] = ctx.z_direct(k, grid[i], q_max);
        });
    for (auto& t : pool) t.join();

    std::vector<std::pair<double, double>> pts;
    for (auto& r : results) pts.emplace_back(r.epsilon, r.value.value);
    PowerLawFit fit;
    bool fitted = pts.size() >= 2;
    if (fitted) fit = fit_power_law(pts);

    if (opt.format == "json") {
        json rows = json::array();
        for (auto& r : results)
            rows.push_back({{"epsilon", r.epsilon},
                            {"Z", r.value.value},
                            {"tail", r.value.tail},
                            {"method", r.method}});
        json out = {{"k", k}, {"points", rows}};
        if (fitted)
            out["fit"] = {{"exponent", fit.exponent},
                          {"log_amplitude", fit.log_amplitude},
                          {"amplitude", fit.amplitude()}};
        emit(opt, out.dump(2) + "\n");
    } else {
        std::ostringstream os;
        os << "epsilon,Z,tail,method\n";
        for (auto& r : results)
            os << fmt17(r.epsilon) << "," << fmt17(r.value.value) << ","
               << fmt17(r.value.tail) << "," << r.method << "\n";
        if (fitted)
            os << "# fit exponent=" << fmt17(fit.exponent)
               << " amplitude=" << fmt17(fit.amplitude()) << "\n";
        emit(opt, os.str());
    }
    return 0;
}

int run_walfisz(const Options& opt, const std::string& grid_spec, bool log_spaced, uint64_t a) {
    auto grid = expand_grid(parse_grid(grid_spec), log_spaced);
    auto rs = walfisz_residuals(grid, a);
    if (opt.format == "json") {
        json rows = json::array();
        for (size_t i = 0; i < rs.x.size(); ++i)
            rows.push_back({{"x", rs.x[i]},
                            {"exact", rs.exact[i]},
                            {"main_term", rs.main_term[i]},
                            {"residual", rs.residual[i]},
                            {"normalized", rs.normalized[i]}});
        emit(opt, json({{"a", a}, {"points", rows}}).dump(2) + "\n");
    } else {
        std::ostringstream os;
        os << "x,exact,main_term,residual,normalized\n";
        for (size_t i = 0; i < rs.x.size(); ++i)
            os << fmt17(rs.x[i]) << "," << fmt17(rs.exact[i]) << "," << fmt17(rs.main_term[i])
               << "," << fmt17(rs.residual[i]) << "," << fmt17(rs.normalized[i]) << "\n";
        emit(opt, os.str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"k-free diffraction intensity toolkit"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand name

    Options opt;
    if (const char* env = std::getenv("KFREE_SIEVE_LIMIT"))
        opt.sieve_limit = std::strtoull(env, nullptr, 10);
    app.add_option("--sieve-limit", opt.sieve_limit, "cap on sieve table size (memory control)");
    app.add_option("--threads", opt.threads, "worker thread cap");
    app.add_option("--format", opt.format, "output format: json|csv|table")
        ->check(CLI::IsMember({"json", "csv", "table"}));
    app.add_option("--output,-o", opt.output, "output file (default stdout)");

    int k = 2;
    double tail = 1e-13;
    double eps = 0;
    uint64_t N = 0, q_max = 0, b_max = 0, t_max = 0, a = 1;
    std::string method = "direct", level = "quick", grid_spec;
    bool log_spaced = false;

    auto* c_cmd = app.add_subcommand("constants", "Euler-product constants xi_k, gamma_k, c_k");
    c_cmd->add_option("--k", k)->required();
    c_cmd->add_option("--tail", tail, "target truncation tail");

    auto* i_cmd = app.add_subcommand("intensity", "one intensity evaluation");
    i_cmd->add_option("--k", k)->required();
    i_cmd->add_option("--eps", eps, "epsilon for the direct method");
    i_cmd->add_option("--N", N, "discretisation parameter");
    i_cmd->add_option("--method", method, "direct|ztilde|via-zk");
    i_cmd->add_option("--q-max", q_max);
    i_cmd->add_option("--b-max", b_max);
    i_cmd->add_option("--t-max", t_max);

    auto* s_cmd = app.add_subcommand("scan", "epsilon scan with power-law fit");
    s_cmd->add_option("--k", k)->required();
    s_cmd->add_option("--eps", grid_spec, "grid start:stop:points")->required();
    s_cmd->add_flag("--log", log_spaced, "log-spaced grid");
    s_cmd->add_option("--q-max", q_max);

    auto* v_cmd = app.add_subcommand("verify", "identity suites");
    v_cmd->add_option("--level", level)->check(CLI::IsMember({"quick", "full"}));

    auto* w_cmd = app.add_subcommand("walfisz", "squarefree-count residuals");
    w_cmd->add_option("--x", grid_spec, "grid start:stop:points")->required();
    w_cmd->add_flag("--log", log_spaced, "log-spaced grid");
    w_cmd->add_option("--a", a, "coprimality condition gcd(n,a)=1");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (c_cmd->parsed()) return run_constants(opt, k, tail);
        if (i_cmd->parsed()) return run_intensity(opt, k, eps, N, method, q_max, b_max, t_max);
        if (s_cmd->parsed()) return run_scan(opt, k, grid_spec, log_spaced, q_max);
        if (v_cmd->parsed()) return run_verify(opt, level);
        if (w_cmd->parsed()) return run_walfisz(opt, grid_spec, log_spaced, a);
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::length_error& e) {
        std::cerr << "resource limit: " << e.what() << "\n";
        return 3;
    } catch (const std::bad_alloc&) {
        std::cerr << "out of memory\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "computation failed: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
