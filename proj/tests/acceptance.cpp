// Acceptance suite: one PASS/FAIL/SKIP line per criterion.
//   acceptance                 run every criterion
//   acceptance --criterion N   run one (exit 0 pass, 1 fail, 77 skip)
// Criteria 4 and 5 read CSVs from $WGBOOST_DATA_DIR (see README).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "wgboost/boosting.hpp"
#include "wgboost/cli.hpp"
#include "wgboost/direction.hpp"
#include "wgboost/error.hpp"
#include "wgboost/eval.hpp"
#include "wgboost/kernel.hpp"
#include "wgboost/model_io.hpp"
#include "wgboost/target.hpp"

using namespace wgboost;
namespace fs = std::filesystem;

namespace {

// ---- tolerances ----
constexpr double kKernelGradRelTol = 1e-6;
constexpr double kTargetDerivTol = 1e-5;
constexpr double kNewtonAgreementTol = 1e-10;
constexpr double kSimplexRoundTripTol = 1e-10;
constexpr double kMmdSelfTol = 1e-12;
constexpr double kPrAucTol = 1e-12;
constexpr double kCoverageLow = 0.90;
constexpr double kCoverageHigh = 0.99;
constexpr double kNllBand = 0.5;
constexpr double kRmseBand = 1.0;
constexpr double kMinAccuracy = 94.0;
constexpr double kMinPrAuc = 95.0;
constexpr double kInitModeTol = 1e-2;

enum class Outcome { Pass, Fail, Skip };

struct Report {
    Outcome outcome = Outcome::Pass;
    std::vector<std::string> lines;

    void check(bool ok, const std::string& what) {
        lines.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
        if (!ok) outcome = Outcome::Fail;
    }
    void note(const std::string& what) { lines.push_back("     " + what); }
};

std::string num(double v) {
    std::ostringstream os;
    os << std::setprecision(4) << v;
    return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

// ---- criterion 1 helpers ----

Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double h) {
    Vector g(x.size());
    for (Index i = 0; i < x.size(); ++i) {
        Vector up = x, down = x;
        up[i] += h;
        down[i] -= h;
        g[i] = (f(up) - f(down)) / (2.0 * h);
    }
    return g;
}

double scaled_error(const Vector& got, const Vector& want) {
    return (got - want).cwiseAbs().cwiseQuotient(want.cwiseAbs().cwiseMax(1.0)).maxCoeff();
}

double target_derivative_error(const EvidentialTarget& t, const Vector& theta) {
    const double h = 1e-5;
    const Vector grad = t.log_grad(theta);
    double err = scaled_error(grad, fd_gradient([&](const Vector& v) { return t.log_density(v); }, theta, h));
    const Matrix hess = t.log_hess_full(theta);
    for (Index i = 0; i < theta.size(); ++i) {
        const Vector col = fd_gradient([&](const Vector& v) { return t.log_grad(v)[i]; }, theta, h);
        err = std::max(err, scaled_error(hess.row(i).transpose(), col));
    }
    err = std::max(err, scaled_error(t.log_hess_diag(theta), hess.diagonal()));
    return err;
}

// Delegates everything but adds a constant to the log density.
class ShiftedTarget final : public EvidentialTarget {
public:
    ShiftedTarget(const EvidentialTarget& base, double shift) : base_(base), shift_(shift) {}
    Index dim() const noexcept override { return base_.dim(); }
    double log_density(const VectorCRef& t) const override { return base_.log_density(t) + shift_; }
    void log_grad_into(const VectorCRef& t, VectorRef out) const override { out = base_.log_grad(t); }
    void log_hess_diag_into(const VectorCRef& t, VectorRef out) const override { out = base_.log_hess_diag(t); }
    void log_hess_full_into(const VectorCRef& t, MatrixRef out) const override { out = base_.log_hess_full(t); }

private:
    const EvidentialTarget& base_;
    double shift_;
};

// Average precision by enumerating each distinct score as a threshold.
double brute_force_average_precision(const std::vector<double>& scores, const std::vector<bool>& labels) {
    std::vector<double> thresholds(scores.begin(), scores.end());
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    const double positives = static_cast<double>(std::count(labels.begin(), labels.end(), true));
    double ap = 0.0, prev_recall = 0.0;
    for (double t : thresholds) {
        double tp = 0.0, predicted = 0.0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            if (scores[i] >= t) {
                predicted += 1.0;
                if (labels[i]) tp += 1.0;
            }
        }
        const double recall = tp / positives;
        ap += (recall - prev_recall) * tp / predicted;
        prev_recall = recall;
    }
    return ap;
}

Report criterion_1() {
    Report r;
    std::mt19937_64 rng(7);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto randn = [&](Index n, double scale) {
        Vector v(n);
        for (Index i = 0; i < n; ++i) v[i] = scale * normal(rng);
        return v;
    };

    {
        const KernelConfig k(0.1);
        double worst = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            const Vector a = randn(3, 1.0);
            const Vector b = a + randn(3, 0.15);
            const Vector g = kernel_grad(a, b, k);
            const Vector fd = fd_gradient([&](const Vector& v) { return kernel_eval(v, b, k); }, a, 1e-6);
            worst = std::max(worst, (g - fd).norm() / g.norm());
        }
        r.check(worst <= kKernelGradRelTol, "kernel_grad vs finite differences, max rel err " + num(worst));
    }
    {
        double worst = 0.0;
        for (int trial = 0; trial < 10; ++trial) {
            const NormalLocationScaleTarget normal_t(normal(rng));
            Vector theta(2);
            theta << normal(rng), 0.5 * normal(rng);
            worst = std::max(worst, target_derivative_error(normal_t, theta));
            const CategoricalTarget cat(1 + trial % 4, 4);
            worst = std::max(worst, target_derivative_error(cat, randn(3, 2.0)));
        }
        r.check(worst <= kTargetDerivTol, "target log_grad / log_hess vs finite differences, max err " + num(worst));
    }
    {
        const KernelConfig k(0.1);
        const NormalLocationScaleTarget t(0.3);
        bool exact = true;
        for (int trial = 0; trial < 10; ++trial) {
            ParticleSet p(1, 2);
            p.row(0) = randn(2, 1.0).transpose();
            exact = exact && smoothed_grad(p, t, k).row(0).transpose() == t.log_grad(p.row(0).transpose());
        }
        r.check(exact, "N=1 smoothed_grad equals log_grad exactly");
    }
    {
        const KernelConfig k(0.1);
        const CategoricalTarget cat(2, 2);
        const GaussianTarget gauss(Vector::Constant(1, 0.4), 0.5);
        double worst = 0.0;
        for (int trial = 0; trial < 10; ++trial) {
            ParticleSet p(1, 1);
            p(0, 0) = 2.0 * normal(rng);
            worst = std::max(worst, (full_newton(p, cat, k) - diag_newton(p, cat, k)).cwiseAbs().maxCoeff());
            worst = std::max(worst, (full_newton(p, gauss, k) - diag_newton(p, gauss, k)).cwiseAbs().maxCoeff());
        }
        r.check(worst <= kNewtonAgreementTol, "full_newton = diag_newton at N=1, d=1, max diff " + num(worst));
    }
    {
        const KernelConfig k(0.1);
        const NormalLocationScaleTarget base(-0.7);
        const ShiftedTarget shifted(base, 123.25);
        ParticleSet p(6, 2);
        for (Index n = 0; n < 6; ++n) p.row(n) = randn(2, 1.0).transpose();
        bool same = true;
        for (const DirectionKind& kind : {DirectionKind{FirstOrder{}}, DirectionKind{DiagNewton{}},
                                          DirectionKind{FullNewton{}}, DirectionKind{Langevin{0.1}}}) {
            Rng r1(11), r2(11);
            same = same && compute_direction(kind, p, base, k, &r1) == compute_direction(kind, p, shifted, k, &r2);
        }
        r.check(same, "directions invariant to log-density constant shifts (bit-exact)");
    }
    {
        double worst = 0.0;
        for (int trial = 0; trial < 50; ++trial) {
            const Vector q = randn(5, 3.0);
            worst = std::max(worst, (to_log_ratio(to_simplex(q)) - q).cwiseAbs().maxCoeff());
        }
        r.check(worst <= kSimplexRoundTripTol, "to_simplex round trip, max err " + num(worst));
    }
    {
        ParticleSet a(10, 2);
        for (Index n = 0; n < 10; ++n) a.row(n) = randn(2, 1.0).transpose();
        const double self = std::abs(mmd_squared(a, a));
        r.check(self <= kMmdSelfTol, "mmd_squared(a, a) = " + num(self));
    }
    {
        double worst = 0.0;
        std::uniform_int_distribution<int> coarse(0, 9);
        for (int trial = 0; trial < 30; ++trial) {
            std::vector<double> scores(40);
            std::vector<bool> labels(40);
            for (std::size_t i = 0; i < 40; ++i) {
                scores[i] = coarse(rng) * 0.1;
                labels[i] = normal(rng) + scores[i] > 0.4;
            }
            labels[0] = true;
            auto flags = std::make_unique<bool[]>(40);
            std::copy(labels.begin(), labels.end(), flags.get());
            const double got = pr_auc(scores, std::span<const bool>(flags.get(), 40));
            worst = std::max(worst, std::abs(got - brute_force_average_precision(scores, labels)));
        }
        r.check(worst <= kPrAucTol, "pr_auc vs brute-force oracle, max diff " + num(worst));
    }
    {
        Matrix X(40, 2);
        std::vector<double> y(40);
        for (Index i = 0; i < 40; ++i) {
            X(i, 0) = normal(rng);
            X(i, 1) = normal(rng);
            y[static_cast<std::size_t>(i)] = std::sin(X(i, 0)) + 0.3 * normal(rng);
        }
        TaskSpec task;
        BoostConfig cfg;
        cfg.max_iterations = 15;
        cfg.init.steps = 50;
        cfg.subsample = 0.7;
        cfg.direction = Langevin{0.1};
        cfg.seed = 42;
        const auto targets = make_targets(task, y);
        WGBoostModel model = fit(X, targets, cfg);
        model.standardization = Standardization{0.0, 1.0};
        const fs::path path = fs::temp_directory_path() / "wgboost_acceptance_model.json";
        save_model(model, path);
        const WGBoostModel loaded = load_model(path);
        fs::remove(path);
        bool exact = true;
        for (Index i = 0; i < X.rows(); ++i) {
            exact = exact && model.predict_particles(X.row(i).transpose()) == loaded.predict_particles(X.row(i).transpose());
        }
        r.check(exact, "save/load predictions bit-exact");

        const WGBoostModel again = fit(X, targets, cfg);
        bool same = model_to_json(again).dump() == model_to_json(fit(X, targets, cfg)).dump();
        for (Index i = 0; i < X.rows(); ++i) {
            same = same && again.predict_particles(X.row(i).transpose()) == model.predict_particles(X.row(i).transpose());
        }
        r.check(same, "same-seed runs identical (Langevin + subsampling)");
    }
    return r;
}

Report criterion_2() {
    Report r;
    cli::BenchOptions opts;
    const auto rows = cli::run_bench_directions(opts);
    auto find = [&](const std::string& name, int m) {
        for (const auto& row : rows) {
            if (row.direction == name && row.iterations == m) return row;
        }
        throw std::runtime_error("missing bench row " + name);
    };
    bool reduced = true;
    std::string detail;
    for (const char* name : {"first_order", "diag_newton", "full_newton", "langevin"}) {
        const auto start = find(name, 0);
        const auto end = find(name, 100);
        reduced = reduced && end.mean_mmd < start.mean_mmd;
        r.note(std::string(name) + ": MMD " + num(start.mean_mmd) + " -> " + num(end.mean_mmd) + ", " +
               num(end.wall_clock_s) + " s");
    }
    r.check(reduced, "(a) every direction reduces mean MMD from M=0 to M=100");
    const double fo = find("first_order", 100).mean_mmd;
    r.check(find("diag_newton", 100).mean_mmd <= fo && find("full_newton", 100).mean_mmd <= fo,
            "(b) diag_newton and full_newton MMD at M=100 <= first_order");
    const double full_time = find("full_newton", 100).wall_clock_s;
    bool slowest = true;
    for (const char* name : {"first_order", "diag_newton", "langevin"}) slowest = slowest && full_time > find(name, 100).wall_clock_s;
    r.check(slowest, "(c) full_newton wall clock strictly greatest");
    return r;
}

cli::CsvTable sin_table(int n, std::uint64_t seed) {
    Rng rng = make_rng(seed, Stream::Synthetic);
    std::uniform_real_distribution<double> ux(-3.5, 3.5);
    std::normal_distribution<double> noise(0.0, std::sqrt(0.5));
    cli::CsvTable t;
    t.columns = {"x", "y"};
    t.values.resize(n, 2);
    for (int i = 0; i < n; ++i) {
        t.values(i, 0) = ux(rng);
        t.values(i, 1) = std::sin(t.values(i, 0)) + noise(rng);
    }
    return t;
}

Report criterion_3() {
    Report r;
    const cli::CsvTable train = sin_table(500, 1);
    const cli::CsvTable test = sin_table(1000, 2);
    cli::RunConfig cfg;
    cfg.task = cli::Task::Regression;
    cfg.label = "y";
    cfg.boost.max_iterations = 500;
    cfg.boost.tree.max_depth = 1;
    cfg.boost.seed = 0;
    cli::finalize_config(cfg);
    const WGBoostModel model = cli::train_model(cfg, train);
    const Matrix X = test.values.leftCols(1);
    const auto particles = model.predict_batch(X);
    const Standardization& s = *model.standardization;
    int inside = 0;
    for (Index i = 0; i < X.rows(); ++i) {
        const double lo = s.inverse(predictive_quantile_normal(particles[static_cast<std::size_t>(i)], 0.025));
        const double hi = s.inverse(predictive_quantile_normal(particles[static_cast<std::size_t>(i)], 0.975));
        const double y = test.values(i, 1);
        inside += (y >= lo && y <= hi) ? 1 : 0;
    }
    const double coverage = static_cast<double>(inside) / static_cast<double>(X.rows());
    r.check(coverage >= kCoverageLow && coverage <= kCoverageHigh,
            "held-out 95% band coverage " + num(coverage) + " in [0.90, 0.99]");
    return r;
}

std::optional<fs::path> data_file(const std::string& name) {
    const char* dir = std::getenv("WGBOOST_DATA_DIR");
    if (dir == nullptr) return std::nullopt;
    const fs::path p = fs::path(dir) / name;
    return fs::exists(p) ? std::optional<fs::path>(p) : std::nullopt;
}

cli::CsvTable subset(const cli::CsvTable& t, std::span<const Index> rows) {
    return cli::CsvTable{t.columns, cli::take_rows(t.values, rows)};
}

Report criterion_4() {
    Report r;
    struct Paper {
        const char* name;
        double nll;
        double rmse;
    };
    const Paper papers[] = {{"boston", 2.47, 2.78}, {"energy", 0.53, 0.42}, {"yacht", 0.16, 0.48}};
    for (const Paper& p : papers) {
        if (!data_file(std::string(p.name) + ".csv")) {
            r.note(std::string(p.name) + ".csv not found");
            r.outcome = Outcome::Skip;
        }
    }
    if (r.outcome == Outcome::Skip) return r;
    for (const Paper& p : papers) {
        const cli::CsvTable table = cli::read_csv(*data_file(std::string(p.name) + ".csv"));
        double nll = 0.0, rmse = 0.0;
        const auto start = std::chrono::steady_clock::now();
        constexpr int kSeeds = 5;
        for (int seed = 0; seed < kSeeds; ++seed) {
            const cli::Split split = cli::random_split(table.values.rows(), 0.1, static_cast<std::uint64_t>(seed), Stream::TestSplit);
            cli::RunConfig cfg;
            cfg.task = cli::Task::Regression;
            cfg.early_stopping = true;
            cfg.val_fraction = 0.2;
            cfg.boost.max_iterations = 4000;
            cfg.boost.tree.max_depth = 3;
            cfg.boost.seed = static_cast<std::uint64_t>(seed);
            cli::finalize_config(cfg);
            const WGBoostModel model = cli::train_model(cfg, subset(table, split.first));
            const cli::Metrics m = cli::evaluate_model(model, subset(table, split.second), table.columns.back());
            nll += *m.nll / kSeeds;
            rmse += *m.rmse / kSeeds;
        }
        r.check(std::abs(nll - p.nll) <= kNllBand, std::string(p.name) + " mean NLL " + num(nll) + " vs " + num(p.nll));
        r.check(std::abs(rmse - p.rmse) <= kRmseBand,
                std::string(p.name) + " mean RMSE " + num(rmse) + " vs " + num(p.rmse) + " (" + num(seconds_since(start)) + " s)");
    }
    return r;
}

Report criterion_5() {
    Report r;
    const auto path = data_file("segment.csv");
    if (!path) {
        r.note("segment.csv not found");
        r.outcome = Outcome::Skip;
        return r;
    }
    const cli::CsvTable table = cli::read_csv(*path);
    const Index label_col = static_cast<Index>(table.columns.size()) - 1;
    const double ood_label = table.values.col(label_col).maxCoeff();
    std::vector<Index> in_rows, ood_rows;
    for (Index i = 0; i < table.values.rows(); ++i) (table.values(i, label_col) == ood_label ? ood_rows : in_rows).push_back(i);
    const cli::Split split = cli::random_split(static_cast<Index>(in_rows.size()), 0.2, 0, Stream::TestSplit);
    std::vector<Index> train_rows, test_rows;
    for (Index j : split.first) train_rows.push_back(in_rows[static_cast<std::size_t>(j)]);
    for (Index j : split.second) test_rows.push_back(in_rows[static_cast<std::size_t>(j)]);
    test_rows.insert(test_rows.end(), ood_rows.begin(), ood_rows.end());

    cli::RunConfig cfg;
    cfg.task = cli::Task::Classification;
    cfg.boost.max_iterations = 4000;
    cfg.boost.tree.max_depth = 3;
    cfg.boost.seed = 0;
    cli::finalize_config(cfg);
    const auto start = std::chrono::steady_clock::now();
    const WGBoostModel model = cli::train_model(cfg, subset(table, train_rows));
    const cli::Metrics m = cli::evaluate_model(model, subset(table, test_rows), table.columns.back());
    r.note("trained in " + num(seconds_since(start)) + " s");
    r.check(m.accuracy && *m.accuracy >= kMinAccuracy, "accuracy " + num(m.accuracy.value_or(0)) + " >= 94.0");
    r.check(m.pr_auc && *m.pr_auc >= kMinPrAuc, "OOD PR-AUC " + num(m.pr_auc.value_or(0)) + " >= 95.0");
    return r;
}

Report criterion_6() {
    Report r;
    const double y = 1.0;
    const NormalPrior prior;
    // Stationary location for a fixed log-scale s, then a bisection in s on
    // the remaining partial derivative.
    auto location = [&](double s) {
        const double prec = std::exp(-2.0 * s);
        return y * prec / (prec + 1.0 / (prior.loc_scale * prior.loc_scale));
    };
    auto ds = [&](double s) {
        const double res = y - location(s);
        return res * res * std::exp(-2.0 * s) - (prior.ig_shape + 1.0) + prior.ig_rate * std::exp(-s);
    };
    double lo = -20.0, hi = 5.0; // ds(lo) > 0 > ds(hi)
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (ds(mid) > 0.0 ? lo : hi) = mid;
    }
    const double s_mode = 0.5 * (lo + hi);
    const double m_mode = location(s_mode);

    std::vector<TargetPtr> targets{std::make_shared<NormalLocationScaleTarget>(y, prior)};
    BoostConfig cfg;
    cfg.n_particles = 1;
    cfg.direction = DiagNewton{};
    cfg.seed = 3;
    const Matrix init = init_particles(targets, cfg);
    const double dist = std::hypot(init(0, 0) - m_mode, init(0, 1) - s_mode);
    r.note("mode (m, log sigma) = (" + num(m_mode) + ", " + num(s_mode) + "), flow reached (" + num(init(0, 0)) + ", " +
           num(init(0, 1)) + ")");
    r.check(dist <= kInitModeTol, "initial particle within 1e-2 of the posterior mode, distance " + num(dist));
    return r;
}

const char* outcome_name(Outcome o) {
    switch (o) {
    case Outcome::Pass: return "PASS";
    case Outcome::Fail: return "FAIL";
    case Outcome::Skip: return "SKIP";
    }
    return "?";
}

const char* const kTitles[] = {
    "",
    "property suite",
    "direction comparison on the sin benchmark",
    "conditional density coverage on synthetic sin data",
    "UCI regression (boston, energy, yacht)",
    "segment classification and OOD detection",
    "initialisation reaches the posterior mode",
};

Outcome run(int id) {
    using Fn = Report (*)();
    const Fn fns[] = {nullptr, criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6};
    const auto start = std::chrono::steady_clock::now();
    Report r;
    try {
        r = fns[id]();
    } catch (const std::exception& e) {
        r.outcome = Outcome::Fail;
        r.lines.push_back(std::string("FAIL exception: ") + e.what());
    }
    for (const auto& line : r.lines) std::cout << "    " << line << "\n";
    std::cout << "criterion " << id << " " << outcome_name(r.outcome) << "  " << kTitles[id] << "  ("
              << num(seconds_since(start)) << " s)" << std::endl;
    return r.outcome;
}

} // namespace

int main(int argc, char** argv) {
    std::vector<int> ids;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--criterion" && i + 1 < argc) {
            ids.push_back(std::atoi(argv[++i]));
        } else {
            std::cerr << "usage: acceptance [--criterion N]...\n";
            return 2;
        }
    }
    if (ids.empty()) ids = {1, 2, 3, 4, 5, 6};
    bool failed = false;
    bool skipped = false;
    for (int id : ids) {
        if (id < 1 || id > 6) {
            std::cerr << "unknown criterion " << id << "\n";
            return 2;
        }
        const Outcome o = run(id);
        failed = failed || o == Outcome::Fail;
        skipped = skipped || o == Outcome::Skip;
    }
    if (failed) return 1;
    return skipped && ids.size() == 1 ? 77 : 0;
}
