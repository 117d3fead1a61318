// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fail. Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <unistd.h>

#include "elastica/cli.hpp"
#include "elastica/demand.hpp"
#include "elastica/metrics.hpp"
#include "elastica/model.hpp"
#include "elastica/ops.hpp"
#include "elastica/pipeline.hpp"
#include "pipeline_fixture.hpp"
#include "test_support.hpp"

using namespace elastica;
using ad::Tape;
using ad::Tensor;
using ad::Var;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string join(const std::vector<double>& v) {
    std::string out;
    for (double x : v) out += (out.empty() ? "" : " ") + fmt::format("{:.3f}", x);
    return out;
}

class Scratch {
public:
    explicit Scratch(const std::string& name)
        : root_(fs::temp_directory_path() / ("elastica_acceptance_" + name + "_" + std::to_string(::getpid()))) {
        fs::remove_all(root_);
        fs::create_directories(root_);
    }
    ~Scratch() { fs::remove_all(root_); }
    std::string operator/(const std::string& leaf) const { return (root_ / leaf).string(); }

private:
    fs::path root_;
};

int invoke(std::vector<std::string> args, std::string* err = nullptr) {
    args.insert(args.begin(), "elastica");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, e;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, e);
    if (err) *err = e.str();
    return code;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// --- 1 -----------------------------------------------------------------------

Outcome analytic_optimum() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    int clamped = 0;
    for (int i = 0; i < 1000; ++i) {
        const double p_min = 20.0 + 80.0 * u(rng);
        const double p_max = p_min + 50.0 + 350.0 * u(rng);
        const ExpDemandCurve curve(1.0 + 49.0 * u(rng), -1.0 / (10.0 + 600.0 * u(rng)), 300.0 * u(rng));
        const PriceBounds bounds(p_min, p_max);
        const auto steps = static_cast<long>(std::floor((p_max - p_min) / 0.01));
        double best_p = p_min, best_e = -INFINITY;
        for (long k = 0; k <= steps; ++k) {
            const double p = p_min + 0.01 * static_cast<double>(k);
            const double e = exp_revenue(curve, p);
            if (e > best_e) {
                best_e = e;
                best_p = p;
            }
        }
        const auto r = optimal_price(curve, bounds);
        clamped += r.clamped ? 1 : 0;
        worst = std::max(worst, std::abs(r.optimal_price - best_p));
    }
    const double secs = seconds_since(t0);
    return {worst <= 0.01 && secs < 5.0,
            fmt::format("max |closed form - grid argmax| = {:.4g} (tol 0.01), {} of 1000 clamped, {:.2f} s (limit 5 s)",
                        worst, clamped, secs)};
}

// --- 2 -----------------------------------------------------------------------

Outcome derivative_correctness() {
    std::mt19937_64 rng(202);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    int sign_failures = 0;
    for (int i = 0; i < 1000; ++i) {
        const ExpDemandCurve curve(1.0 + 49.0 * u(rng), -1.0 / (20.0 + 600.0 * u(rng)), 300.0 * u(rng));
        // Far above -1/w the exponential term drops below the rounding of b and
        // a difference quotient of E carries no signal.
        const double star = -1.0 / curve.w();
        const double p = star * (0.2 + 2.8 * u(rng));
        const double h = 1e-5 * p;
        const double numeric = (exp_revenue(curve, p + h) - exp_revenue(curve, p - h)) / (2.0 * h);
        const double analytic = exp_revenue_derivative(curve, p);
        worst = std::max(worst, std::abs(analytic - numeric) / std::max(std::abs(analytic), std::abs(numeric)));

        for (double f : {0.01, 0.5, 0.9, 0.999, 1.0 - 1e-9}) {
            if (!(exp_revenue_derivative(curve, star * f) > 0.0)) ++sign_failures;
        }
        for (double f : {1.0 + 1e-9, 1.001, 1.1, 2.0, 20.0}) {
            if (!(exp_revenue_derivative(curve, star * f) < 0.0)) ++sign_failures;
        }
    }
    return {worst < 1e-6 && sign_failures == 0,
            fmt::format("max relative error {:.3g} (tol 1e-6), {} sign-change violations around -1/w", worst,
                        sign_failures)};
}

// --- 3 -----------------------------------------------------------------------

Outcome gradient_suite() {
    using fixtures::GraphFn;
    using fixtures::gradcheck;
    using fixtures::gru_from;
    using fixtures::gru_tensors;
    using fixtures::random_tensor;
    struct Case {
        std::string name;
        double tol;
        GraphFn f;
        std::function<std::vector<Tensor>(std::mt19937_64&)> inputs;
    };
    const std::vector<Case> cases{
        {"dense", 1e-4, [](Tape&, const std::vector<Var>& in) { return ad::dense(in[0], in[1], in[2]); },
         [](std::mt19937_64& r) {
             return std::vector<Tensor>{random_tensor({4, 5}, r), random_tensor({5, 3}, r), random_tensor({3}, r)};
         }},
        {"selector_block", 1e-4,
         [](Tape&, const std::vector<Var>& in) { return ad::selector_block(in[0], in[1], in[2]); },
         [](std::mt19937_64& r) {
             return std::vector<Tensor>{random_tensor({3, 4}, r), random_tensor({4, 4}, r), random_tensor({4}, r)};
         }},
        {"gating", 1e-4,
         [](Tape&, const std::vector<Var>& in) { return ad::gating(in[0], in[1], in[2], in[3], in[4]); },
         [](std::mt19937_64& r) {
             return std::vector<Tensor>{random_tensor({2, 4}, r), random_tensor({2, 4}, r), random_tensor({2, 4}, r),
                                        random_tensor({4, 4}, r), random_tensor({4}, r)};
         }},
        {"conv1d", 1e-4,
         [](Tape&, const std::vector<Var>& in) { return ad::avg_pool(ad::conv1d(in[0], in[1], in[2])); },
         [](std::mt19937_64& r) {
             return std::vector<Tensor>{random_tensor({2, 8, 2}, r), random_tensor({3, 2, 3}, r),
                                        random_tensor({3}, r)};
         }},
        {"gru_5_steps", 1e-3,
         [](Tape&, const std::vector<Var>& in) {
             const auto p = gru_from(in, 2);
             Var h = in[1];
             for (std::size_t s = 0; s < 5; ++s) h = ad::gru_cell(ad::time_step(in[0], s), h, p);
             return h;
         },
         [](std::mt19937_64& r) {
             std::vector<Tensor> t{random_tensor({2, 5, 3}, r), random_tensor({2, 4}, r)};
             for (auto& g : gru_tensors(3, 4, r)) t.push_back(std::move(g));
             return t;
         }},
        {"factorization_machine", 1e-4,
         [](Tape&, const std::vector<Var>& in) { return ad::factorization_machine(in[0], in[1], in[2], in[3]); },
         [](std::mt19937_64& r) {
             return std::vector<Tensor>{random_tensor({3, 5}, r), random_tensor({1}, r), random_tensor({5}, r),
                                        random_tensor({5, 3}, r)};
         }},
        {"time_attention", 1e-4,
         [](Tape&, const std::vector<Var>& in) { return ad::time_attention(in[0], in[1], in[2]); },
         [](std::mt19937_64& r) {
             return std::vector<Tensor>{random_tensor({2, 4, 3}, r), random_tensor({2, 4, 3}, r),
                                        random_tensor({2, 3}, r)};
         }},
        {"huber_composition", 1e-4,
         [](Tape&, const std::vector<Var>& in) {
             return ad::mean(ad::huber(ad::sub(ad::matmul(in[0], in[1]), in[2]), 0.8));
         },
         [](std::mt19937_64& r) {
             return std::vector<Tensor>{random_tensor({6, 3}, r), random_tensor({3, 1}, r), random_tensor({6, 1}, r)};
         }},
    };
    bool pass = true;
    std::string detail;
    std::mt19937_64 rng(303);
    for (const auto& c : cases) {
        double worst = 0.0;
        for (int i = 0; i < 20; ++i) worst = std::max(worst, gradcheck(c.f, c.inputs(rng), static_cast<std::uint64_t>(i)));
        pass = pass && worst < c.tol;
        detail += fmt::format("{}{} {:.2g}", detail.empty() ? "" : ", ", c.name, worst);
    }
    return {pass, "max relative error over 20 instances: " + detail};
}

// --- 4 -----------------------------------------------------------------------

Outcome fm_identity() {
    std::mt19937_64 rng(404);
    std::uniform_int_distribution<std::size_t> n_dist(2, 12), k_dist(1, 8), b_dist(1, 4);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const std::size_t n = n_dist(rng), k = k_dist(rng), rows = b_dist(rng);
        const Tensor x = fixtures::random_tensor({rows, n}, rng), w0 = fixtures::random_tensor({1}, rng),
                     w = fixtures::random_tensor({n}, rng), v = fixtures::random_tensor({n, k}, rng);
        Tape t;
        const auto fast = ad::factorization_machine(t.constant(x), t.constant(w0), t.constant(w), t.constant(v)).value();
        for (std::size_t r = 0; r < rows; ++r) {
            const double* xr = x.values.data() + r * n;
            double naive = w0.values[0];
            for (std::size_t a = 0; a < n; ++a) naive += w.values[a] * xr[a];
            for (std::size_t a = 0; a < n; ++a) {
                for (std::size_t b = a + 1; b < n; ++b) {
                    double dot = 0.0;
                    for (std::size_t f = 0; f < k; ++f) dot += v.values[a * k + f] * v.values[b * k + f];
                    naive += dot * xr[a] * xr[b];
                }
            }
            worst = std::max(worst, std::abs(fast[r] - naive));
        }
    }
    return {worst <= 1e-12, fmt::format("max |fast - pairwise| = {:.3g} over 100 instances (tol 1e-12)", worst)};
}

// --- 5 -----------------------------------------------------------------------

Outcome constraint_exactness() {
    const auto run = fixtures::make_run(fixtures::tiny_config());
    const ModelConfig mc = make_model(run.prepared, run.config).config();
    const double lo = -1.0 / mc.p_min, hi = -1.0 / mc.p_max;
    std::mt19937_64 rng(505);
    std::uniform_real_distribution<double> scale(0.0, 300.0);
    std::uniform_int_distribution<std::size_t> pick(0, run.rows.size() - 1);
    std::size_t outputs = 0, violations = 0, saturated = 0;
    std::optional<ElasticityModel> model;
    for (int pass = 0; pass < 10000; ++pass) {
        if (pass % 100 == 0) model.emplace(mc, static_cast<std::uint64_t>(pass));
        // Output layers drawn at scales from ordinary to far past saturation.
        const double s = pass % 5 == 0 ? 1.0 : scale(rng);
        std::normal_distribution<double> g(0.0, s);
        for (auto& [name, p] : model->params()) {
            if (name.ends_with("out/w") || name.ends_with("out/b")) {
                for (auto& x : p.value.values) x = g(rng);
            }
        }
        const RawExample* batch[] = {&run.rows[pick(rng)].x, &run.rows[pick(rng)].x};
        for (const auto& h : model->evaluate(batch)) {
            for (double w : {h.w_r, h.w_g}) {
                violations += (w < lo || w > hi || !std::isfinite(w)) ? 1 : 0;
                saturated += (w == lo || w == hi) ? 1 : 0;
            }
            for (double b : {h.b_r, h.b_g}) violations += (b < 0.0 || !std::isfinite(b)) ? 1 : 0;
            outputs += 4;
        }
    }
    return {violations == 0, fmt::format("10000 forward passes, {} emitted values, {} violations, {} w at a bound",
                                         outputs, violations, saturated)};
}

// --- 6 -----------------------------------------------------------------------

constexpr const char* kRecoveryToml = R"(
seed = 11
n_hotels = 1
rooms_per_hotel = 1
n_groups = 1
horizon_days = 2000
train_days = 2000
noise = false
seasonality_amplitude = 0.0
avg_sales_min = 20.0
avg_sales_max = 20.0
inventory_min = 60
inventory_max = 60
[[curve]]
rid = 0
q0 = 22.0
w = -0.006666666666666667
b = 0.0
[model]
trunk = [32, 16]
head_hidden = 8
[train]
epochs = 60
batch = 64
lr = 0.003
dropout = 0.0
)";

Outcome elasticity_recovery() {
    const auto t0 = Clock::now();
    Scratch s("recovery");
    write_file_atomic(s / "c.toml", kRecoveryToml);
    std::string err;
    if (invoke({"simulate", "--config", s / "c.toml", "--out", s / "data"}, &err) != 0 ||
        invoke({"train", "--config", s / "c.toml", "--data", s / "data", "--out", s / "model"}, &err) != 0 ||
        invoke({"price", "--data", s / "data", "--model", s / "model", "--out", s / "price.csv"}, &err) != 0) {
        return {false, "pipeline failed: " + err};
    }
    std::istringstream in(slurp(s / "price.csv"));
    std::string line;
    std::vector<std::string> cells;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("rid", 0) == 0) continue;
        cells.clear();
        std::stringstream ls(line);
        std::string c;
        while (std::getline(ls, c, ',')) cells.push_back(c);
    }
    if (cells.size() < 7) return {false, "price CSV has no data row"};
    const double price = std::stod(cells[2]), w = std::stod(cells[6]);
    const double truth = -1.0 / 150.0;
    const double rel = std::abs(w - truth) / std::abs(truth);
    const double secs = seconds_since(t0);
    const std::string log = slurp(s / "data/reservations.jsonl");
    const auto n_samples = std::count(log.begin(), log.end(), '\n');
    return {n_samples == 2000 && rel <= 0.15 && price >= 127.5 && price <= 172.5 && secs < 600.0,
            fmt::format("{} samples, w = {:.6g} (truth {:.6g}, rel err {:.3f}, tol 0.15), suggested price {:.2f} "
                        "(range [127.5, 172.5]), {:.1f} s",
                        n_samples, w, truth, rel, price, secs)};
}

// --- 7 and 8 -------------------------------------------------------------------

EvalReport train_and_evaluate(const std::string& toml, const std::vector<std::string>& overrides) {
    Config cfg = Config::parse(toml);
    for (const auto& o : overrides) cfg.apply_override(o);
    const auto config = PipelineConfig::from_config(cfg);
    const Dataset data = simulate_dataset(config.scenario);
    const Prepared prepared = prepare(data, config);
    const auto rows = training_rows(prepared, data, config);
    ElasticityModel model = make_model(prepared, config);
    train(model, rows, config.train);
    return evaluate_model(model, prepared, data, config).report;
}

// 60 rooms in 10 groups of 6, Poisson noise, 70% of room nights unobserved.
constexpr const char* kSparseToml = R"(
n_hotels = 20
rooms_per_hotel = 3
n_groups = 10
noise = true
observe_fraction = 0.3
horizon_days = 60
train_days = 30
[model]
trunk = [32, 16]
head_hidden = 8
[train]
epochs = 30
batch = 64
)";

Outcome multitask_benefit() {
    std::vector<double> with, without;
    for (int seed = 1; seed <= 5; ++seed) {
        const std::string s = "seed=" + std::to_string(seed);
        with.push_back(train_and_evaluate(kSparseToml, {s, "train.beta=0.5"}).wmape);
        without.push_back(train_and_evaluate(kSparseToml, {s, "train.beta=0"}).wmape);
    }
    const double a = median(with), b = median(without);
    return {a < b, fmt::format("median held-out WMAPE beta=0.5 {:.3f} vs beta=0 {:.3f} (seeds 1-5: [{}] vs [{}])", a,
                               b, join(with), join(without))};
}

// Room elasticities spread widely around their group's, so one pooled W fits poorly.
constexpr const char* kHeterogeneousToml = R"(
n_hotels = 20
rooms_per_hotel = 3
n_groups = 10
noise = true
elasticity_spread = 0.4
horizon_days = 60
train_days = 30
[model]
trunk = [32, 16]
head_hidden = 8
[train]
epochs = 30
batch = 64
)";

Outcome baseline_dominance() {
    std::vector<double> model, baseline;
    for (int seed = 1; seed <= 5; ++seed) {
        const auto r = train_and_evaluate(kHeterogeneousToml, {"seed=" + std::to_string(seed)});
        model.push_back(r.mape);
        baseline.push_back(r.baseline_mape);
    }
    const double a = median(model), b = median(baseline);
    return {a < b, fmt::format("median held-out MAPE model {:.3f} vs constant-elasticity baseline {:.3f} "
                               "(seeds 1-5: [{}] vs [{}])",
                               a, b, join(model), join(baseline))};
}

// --- 9 -----------------------------------------------------------------------

Outcome embedding_semantics() {
    const auto g = fixtures::two_clique_graph(15, 10);
    SkipGramParams p;
    p.seed = 4;
    const auto table = fixtures::train_on_graph(g, p);
    const auto s = fixtures::clique_similarity(table, g, 15, 10);
    return {s.intra - s.inter > 0.2, fmt::format("mean cosine intra {:.3f}, inter {:.3f}, gap {:.3f} (need > 0.2)",
                                                 s.intra, s.inter, s.intra - s.inter)};
}

// --- 10 ----------------------------------------------------------------------

Outcome metric_identities() {
    const std::vector<double> a{10, 20}, p{9, 22};
    const double m = mape(a, p), w = wmape(a, p), single = mape(std::vector<double>{10}, std::vector<double>{5});
    const double zero = mape(a, a) + wmape(a, a);
    bool ok = std::abs(m - 10.0) <= 1e-9 && std::abs(w - 10.0) <= 1e-9 && std::abs(single - 50.0) <= 1e-9 && zero == 0.0;

    // Huber at |x| = theta: value continuous, slope theta from both sides.
    double value_gap = 0.0, slope_gap = 0.0;
    for (double theta : {0.1, 0.5, 1.0, 2.5}) {
        for (double sign : {-1.0, 1.0}) {
            const double eps = 1e-9;
            const double inner = ad::huber_value(sign * (theta - eps), theta), outer = ad::huber_value(sign * (theta + eps), theta);
            value_gap = std::max(value_gap, std::abs(outer - inner) - 2.0 * theta * eps * 1.0000001);
            value_gap = std::max(value_gap, std::abs(ad::huber_value(sign * theta, theta) - 0.5 * theta * theta));
            for (double x : {sign * (theta - eps), sign * (theta + eps)}) {
                Tape t;
                ad::Parameter param{"x", Tensor({1}, {x}), {0.0}};
                const Var v = t.param(param);
                t.backward(ad::sum(ad::huber(v, theta)));
                slope_gap = std::max(slope_gap, std::abs(param.grad[0] - sign * theta));
            }
        }
    }
    ok = ok && value_gap <= 1e-12 && slope_gap <= 1e-8;
    return {ok, fmt::format("mape {:.12g} (want 10), wmape {:.12g} (want 10), single {:.12g} (want 50); huber value "
                            "gap {:.2g}, slope gap {:.2g} at |x| = theta",
                            m, w, single, std::max(value_gap, 0.0), slope_gap)};
}

// --- 11 ----------------------------------------------------------------------

Outcome determinism() {
    Scratch s("determinism");
    const std::string cfg = s / "c.toml";
    write_file_atomic(cfg, std::string(kSparseToml) + "\n");
    std::string err;
    for (const std::string run : {"a", "b"}) {
        if (invoke({"simulate", "--config", cfg, "--set", "seed=3", "--set", "train.epochs=5", "--out",
                    s / (run + "/data")},
                   &err) != 0 ||
            invoke({"train", "--config", cfg, "--set", "seed=3", "--set", "train.epochs=5", "--data",
                    s / (run + "/data"), "--out", s / (run + "/model")},
                   &err) != 0 ||
            invoke({"evaluate", "--data", s / (run + "/data"), "--model", s / (run + "/model"), "--out",
                    s / (run + "/eval")},
                   &err) != 0) {
            return {false, "pipeline failed: " + err};
        }
    }
    std::size_t files = 0, differing = 0;
    for (const auto& entry : fs::recursive_directory_iterator(s / "a")) {
        if (!entry.is_regular_file()) continue;
        const auto rel = fs::relative(entry.path(), s / "a");
        const auto other = fs::path(s / "b") / rel;
        ++files;
        if (!fs::exists(other) || slurp(entry.path().string()) != slurp(other.string())) ++differing;
    }
    return {files > 0 && differing == 0,
            fmt::format("simulate -> train -> evaluate twice: {} files compared, {} differ", files, differing)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"analytic optimum agrees with grid search", analytic_optimum},
        {"revenue derivative matches finite differences", derivative_correctness},
        {"gradient suite", gradient_suite},
        {"factorization machine identity", fm_identity},
        {"constraint exactness", constraint_exactness},
        {"synthetic elasticity recovery", elasticity_recovery},
        {"multi-task benefit", multitask_benefit},
        {"baseline dominance", baseline_dominance},
        {"embedding semantics", embedding_semantics},
        {"metric identities", metric_identities},
        {"determinism", determinism},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int number = static_cast<int>(i) + 1;
        if (!only.empty() && !only.count(number)) continue;
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::printf("criterion %2d %s: %s - %s [%.1f s]\n", number, o.pass ? "PASS" : "FAIL",
                    criteria[i].first.c_str(), o.detail.c_str(), seconds_since(t0));
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
