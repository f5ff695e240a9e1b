#include "cli.hpp"

#include "spsdr/dimselect.hpp"
#include "spsdr/error.hpp"
#include "spsdr/io.hpp"
#include "spsdr/models.hpp"
#include "spsdr/predictor.hpp"
#include "spsdr/simulate.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace spsdr::cli {

namespace fs = std::filesystem;

namespace {

// Options -------------------------------------------------------------------

struct FitOptions {
    std::string data;
    std::string model = "sscm";
    int r = 2;
    std::optional<int> d;
    std::string select_d;
    double alpha = 0.05;
    int kernels = 2;
    int folds = 5;
    std::optional<double> grid_min;
    std::optional<double> grid_max;
    std::optional<int> grid_size;
    std::vector<double> grid;
    std::string basis = "poly";
    std::uint64_t seed = 0;
    std::string out;
};

struct PredictOptions {
    std::string model;
    std::string data;
    int kernels = 2;
    bool tune = false;
    std::optional<double> h1;
    std::optional<double> h2;
    std::string out;
    std::string model_out;
};

struct SimulateOptions {
    SimConfig cfg;
    std::string model = "sem";
    std::string locations = "uniform";
    std::vector<std::string> methods{"all"};
    std::string d_policy;
    std::size_t threads = 0;
    std::string out;
    std::string datasets_dir;
    bool strict = false;
};

struct EvaluateOptions {
    std::string pred;
    std::string truth;
    std::string out;
};

std::string fmt(double v) { return io::format_double(v); }

// fit -----------------------------------------------------------------------

std::vector<double> fit_grid(const FitOptions& o, ModelKind kind) {
    if (!o.grid.empty()) {
        return o.grid;
    }
    if (!o.grid_min && !o.grid_max && !o.grid_size) {
        return {};
    }
    if (!o.grid_min || !o.grid_max) {
        throw Error(ErrorCode::InvalidArgument, "--grid-min and --grid-max must be given together");
    }
    if (kind == ModelKind::sscm) {
        return geometric_grid(*o.grid_min, *o.grid_max, o.grid_size.value_or(20));
    }
    return linear_grid(*o.grid_min, *o.grid_max, o.grid_size.value_or(39));
}

int cmd_fit(const FitOptions& o, std::ostream& out) {
    const SpatialSample sample = io::read_dataset_csv(o.data, true).sample();
    io::ModelFile model;
    model.seed = o.seed;

    if (o.model == "full" || o.model == "FULL") {
        model.reference = make_reference(sample, nullptr);
        io::save_model(o.out, model);
        out << "model: full\nn: " << sample.size() << "\np: " << sample.predictors() << "\n";
        return kExitOk;
    }

    const ModelKind kind = parse_model_kind(o.model);
    BasisSpec spec;
    spec.kind = parse_basis_kind(o.basis);
    spec.r = o.r;
    const std::vector<double> grid = kind == ModelKind::ind ? std::vector<double>{} : fit_grid(o, kind);

    if (o.d && !o.select_d.empty()) {
        throw Error(ErrorCode::InvalidArgument, "--d and --select-d are mutually exclusive");
    }
    int d = o.d.value_or(1);
    std::optional<DimSelection> selection;
    if (!o.select_d.empty()) {
        const Criterion criterion = parse_criterion(o.select_d);
        const int p = static_cast<int>(sample.predictors());
        const int n = static_cast<int>(sample.size());
        if (criterion == Criterion::cv_mpe) {
            std::vector<int> range;
            for (int k = 1; k <= std::min(spec.r, p); ++k) range.push_back(k);
            CvOptions cv;
            cv.folds = o.folds;
            cv.seed = o.seed;
            selection = select_cv(sample, kind, spec, o.kernels == 1 ? KernelCount::one : KernelCount::two, range,
                                  cv, grid);
        } else {
            const auto logliks = rank_logliks(sample, kind, spec, grid);
            selection = criterion == Criterion::lr ? select_lr(logliks, p, spec.r, n, o.alpha)
                                                   : select_ic(logliks, p, spec.r, n, criterion);
        }
        d = selection->d_star;
    }

    ReductionFit fit;
    try {
        fit = fit_model(sample, kind, spec, d, grid);
    } catch (const Error& e) {
        throw Error(e.code(), std::string("fit stage: ") + e.what());
    }
    model.reference = make_reference(sample, &fit);
    model.fit = std::move(fit);
    io::save_model(o.out, model);

    out << "model: " << to_string(kind) << "\n";
    out << "n: " << sample.size() << "\np: " << sample.predictors() << "\nr: " << spec.r << "\n";
    out << "d: " << d << "\n";
    out << "loglik: " << fmt(model.fit->loglik) << "\n";
    if (kind == ModelKind::sscm) out << "lambda: " << fmt(model.fit->spatial_param) << "\n";
    if (kind == ModelKind::sem) out << "theta: " << fmt(model.fit->spatial_param) << "\n";
    if (selection) {
        out << "selection: " << to_string(selection->criterion) << "\n";
        for (const auto& row : selection->trace) {
            out << "  delta=" << row.delta << " value=" << fmt(row.value);
            if (selection->criterion == Criterion::lr) out << " p_value=" << fmt(row.p_value);
            out << "\n";
        }
    }
    return kExitOk;
}

// predict -------------------------------------------------------------------

int cmd_predict(const PredictOptions& o, std::ostream& out) {
    io::ModelFile model = io::load_model(o.model);
    const io::Dataset query = io::read_dataset_csv(o.data, false);

    PredictorConfig config;
    config.mode.kernels = o.kernels == 1 ? KernelCount::one : KernelCount::two;
    if (o.kernels != 1 && o.kernels != 2) {
        throw Error(ErrorCode::InvalidArgument, "--kernels must be 1 or 2");
    }
    if (!model.fit) {
        config.mode.source = ReductionSource::full;
    } else {
        switch (model.fit->kind) {
            case ModelKind::ind: config.mode.source = ReductionSource::ind; break;
            case ModelKind::sscm: config.mode.source = ReductionSource::sscm; break;
            case ModelKind::sem: config.mode.source = ReductionSource::sem; break;
        }
    }

    bool tuned = false;
    if (o.tune) {
        if (o.h1 || o.h2) {
            throw Error(ErrorCode::InvalidArgument, "--tune-bandwidths excludes --h1/--h2");
        }
        config = with_default_grids(config, model.reference);
        const Bandwidths bw = loocv_bandwidths(model.reference, config);
        config.h1 = bw.h1;
        config.h2 = bw.h2;
        tuned = true;
    } else if (o.h1) {
        config.h1 = *o.h1;
        if (config.mode.two_kernel()) {
            if (!o.h2) throw Error(ErrorCode::InvalidArgument, "two-kernel prediction needs --h2");
            config.h2 = o.h2;
        }
    } else if (model.h1 && (!config.mode.two_kernel() || model.h2)) {
        config.h1 = *model.h1;
        if (config.mode.two_kernel()) config.h2 = model.h2;
    } else {
        throw Error(ErrorCode::InvalidArgument, "give --h1 [--h2] or --tune-bandwidths");
    }

    const ReductionFit* fit = model.fit ? &*model.fit : nullptr;
    const auto predictions = predict_rows(query.x, query.coords, fit, config, model.reference);
    io::write_file_atomic(o.out, io::predictions_csv(query.coords, predictions));

    if (tuned) {
        model.h1 = config.h1;
        model.h2 = config.h2;
        io::save_model(o.model_out.empty() ? o.model : o.model_out, model);
    }

    std::size_t fallbacks = 0;
    for (const auto& p : predictions) fallbacks += p.fallback ? 1 : 0;
    out << "mode: " << config.mode.name() << "\n";
    out << "h1: " << fmt(config.h1) << "\n";
    if (config.h2) out << "h2: " << fmt(*config.h2) << "\n";
    out << "rows: " << predictions.size() << "\n";
    out << "fallbacks: " << fallbacks << "\n";
    return kExitOk;
}

// simulate ------------------------------------------------------------------

std::vector<PredictorMode> parse_methods(const std::vector<std::string>& names) {
    std::vector<PredictorMode> methods;
    for (const auto& name : names) {
        if (name == "all") {
            for (const auto& m : PredictorMode::all()) methods.push_back(m);
        } else {
            methods.push_back(PredictorMode::parse(name));
        }
    }
    return methods;
}

int cmd_simulate(SimulateOptions o, std::ostream& out) {
    o.cfg.model = parse_model_kind(o.model);
    o.cfg.locations = parse_location_mode(o.locations);
    const DPolicy policy = o.d_policy.empty() ? DPolicy{DPolicy::Kind::fixed, o.cfg.d, 0.05}
                                              : DPolicy::parse(o.d_policy);
    const auto methods = parse_methods(o.methods);
    const MetricsReport report = run_experiment(o.cfg, methods, policy, o.threads);

    if (!o.datasets_dir.empty()) {
        const fs::path dir(o.datasets_dir);
        for (int rep = 0; rep < o.cfg.reps; ++rep) {
            const Replication data = make_replication(o.cfg, rep);
            const std::string stem = "rep" + std::to_string(rep);
            io::write_file_atomic(dir / (stem + "_train.csv"), io::dataset_csv(data.train));
            io::write_file_atomic(dir / (stem + "_test.csv"), io::dataset_csv(data.test));
        }
    }
    if (!o.out.empty()) {
        io::write_file_atomic(o.out, io::dump(io::to_json(report)));
    }

    out << "method,mean_mse,sd_mse,failures\n";
    for (const auto& m : report.methods) {
        out << m.method << ',' << fmt(m.mean) << ',' << fmt(m.sd) << ',' << m.failures
            << (m.unstable ? ",unstable" : "") << "\n";
    }
    if (o.strict && report.any_unstable()) {
        throw Error(ErrorCode::MethodUnstable, "a method failed in at least 20% of replications");
    }
    return kExitOk;
}

// evaluate ------------------------------------------------------------------

int cmd_evaluate(const EvaluateOptions& o, std::ostream& out) {
    const io::ScoredColumn pred = io::read_value_column(o.pred, {"y_hat"});
    const io::ScoredColumn truth = io::read_value_column(o.truth, {"y"});
    if (pred.values.size() != truth.values.size()) {
        throw Error(ErrorCode::InvalidArgument, "prediction and truth files have different row counts (" +
                                                    std::to_string(pred.values.size()) + " vs " +
                                                    std::to_string(truth.values.size()) + ")");
    }
    for (Index i = 0; i < pred.coords.rows(); ++i) {
        const double gap = (pred.coords.row(i) - truth.coords.row(i)).cwiseAbs().maxCoeff();
        const double scale = std::max(1.0, truth.coords.row(i).cwiseAbs().maxCoeff());
        if (gap > 1e-9 * scale) {
            throw Error(ErrorCode::InvalidArgument, "row " + std::to_string(i + 2) + ": sites do not match");
        }
    }
    if (pred.values.size() == 0) {
        throw Error(ErrorCode::InvalidArgument, "no rows to evaluate");
    }
    const Vector residuals = truth.values - pred.values;
    const double mse = residuals.squaredNorm() / static_cast<double>(residuals.size());
    io::Json j;
    j["format"] = "spsdr-evaluation";
    j["n"] = residuals.size();
    j["mse"] = mse;
    j["rmse"] = std::sqrt(mse);
    io::Json res = io::Json::array();
    for (Index i = 0; i < residuals.size(); ++i) res.push_back(residuals(i));
    j["residuals"] = res;
    if (!o.out.empty()) {
        io::write_file_atomic(o.out, io::dump(j));
    }
    out << "n: " << residuals.size() << "\nmse: " << fmt(mse) << "\nrmse: " << fmt(std::sqrt(mse)) << "\n";
    return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Spatial sufficient dimension reduction and kernel prediction", "spsdr"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(SPSDR_VERSION));

    FitOptions fit;
    auto* fit_cmd = app.add_subcommand("fit", "Fit an inverse-regression reduction and write a model file");
    fit_cmd->add_option("--data", fit.data, "Training CSV (s1,s2,y,x1..xp)")->required();
    fit_cmd->add_option("--model", fit.model, "ind, sscm, sem or full")->capture_default_str();
    fit_cmd->add_option("--r", fit.r, "Basis degree / slices minus one")->capture_default_str();
    fit_cmd->add_option("--d", fit.d, "Reduction rank");
    fit_cmd->add_option("--select-d", fit.select_d, "Choose d by lr, aic, bic or cv");
    fit_cmd->add_option("--alpha", fit.alpha, "LR significance level")->capture_default_str();
    fit_cmd->add_option("--kernels", fit.kernels, "Kernel count used by --select-d cv")->capture_default_str();
    fit_cmd->add_option("--folds", fit.folds, "Folds used by --select-d cv")->capture_default_str();
    fit_cmd->add_option("--grid-min", fit.grid_min, "Lower end of the lambda/theta grid");
    fit_cmd->add_option("--grid-max", fit.grid_max, "Upper end of the lambda/theta grid");
    fit_cmd->add_option("--grid-size", fit.grid_size, "Number of grid points");
    fit_cmd->add_option("--grid", fit.grid, "Explicit grid values")->delimiter(',');
    fit_cmd->add_option("--basis", fit.basis, "poly or slice")->capture_default_str();
    fit_cmd->add_option("--seed", fit.seed, "Seed for cross-validation folds")->capture_default_str();
    fit_cmd->add_option("--out", fit.out, "Model file to write")->required();

    PredictOptions pred;
    auto* pred_cmd = app.add_subcommand("predict", "Kernel predictions at new sites");
    pred_cmd->add_option("--model", pred.model, "Model file")->required();
    pred_cmd->add_option("--data", pred.data, "Query CSV (s1,s2,[y],x1..xp)")->required();
    pred_cmd->add_option("--kernels", pred.kernels, "1 or 2")->capture_default_str();
    pred_cmd->add_flag("--tune-bandwidths", pred.tune, "Choose bandwidths by leave-one-out CV");
    pred_cmd->add_option("--h1", pred.h1, "Predictor-space bandwidth");
    pred_cmd->add_option("--h2", pred.h2, "Spatial bandwidth");
    pred_cmd->add_option("--out", pred.out, "Predictions CSV to write")->required();
    pred_cmd->add_option("--model-out", pred.model_out, "Where to save the model with tuned bandwidths");

    SimulateOptions sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Replicated simulation experiment");
    sim_cmd->add_option("--n", sim.cfg.n)->capture_default_str();
    sim_cmd->add_option("--p", sim.cfg.p)->capture_default_str();
    sim_cmd->add_option("--r", sim.cfg.r)->capture_default_str();
    sim_cmd->add_option("--d", sim.cfg.d, "True rank (and fitted rank for a fixed policy)")->capture_default_str();
    sim_cmd->add_option("--model", sim.model, "sscm or sem")->capture_default_str();
    sim_cmd->add_option("--lambda", sim.cfg.lambda)->capture_default_str();
    sim_cmd->add_option("--theta", sim.cfg.theta)->capture_default_str();
    sim_cmd->add_option("--reps", sim.cfg.reps)->capture_default_str();
    sim_cmd->add_option("--train-frac", sim.cfg.train_frac)->capture_default_str();
    sim_cmd->add_option("--seed", sim.cfg.seed)->capture_default_str();
    sim_cmd->add_option("--locations", sim.locations, "uniform or grid")->capture_default_str();
    sim_cmd->add_option("--lambda-grid", sim.cfg.lambda_grid, "Estimation grid for lambda")->delimiter(',');
    sim_cmd->add_option("--theta-grid", sim.cfg.theta_grid, "Estimation grid for theta")->delimiter(',');
    sim_cmd->add_option("--folds", sim.cfg.cv_folds)->capture_default_str();
    sim_cmd->add_option("--methods", sim.methods, "Predictor modes, e.g. 2k.SEM, or all")->delimiter(',');
    sim_cmd->add_option("--d-policy", sim.d_policy, "Integer rank, lr, aic, bic or cv");
    sim_cmd->add_option("--threads", sim.threads, "Worker threads (default SPSDR_THREADS or all cores)");
    sim_cmd->add_option("--out", sim.out, "Report JSON to write");
    sim_cmd->add_option("--datasets-dir", sim.datasets_dir, "Write per-replication train/test CSVs here");
    sim_cmd->add_flag("--strict", sim.strict, "Exit 3 when a method is unstable");

    EvaluateOptions eval;
    auto* eval_cmd = app.add_subcommand("evaluate", "MSE and RMSE of predictions against truth");
    eval_cmd->add_option("--pred", eval.pred, "Predictions CSV")->required();
    eval_cmd->add_option("--truth", eval.truth, "CSV with a y column")->required();
    eval_cmd->add_option("--out", eval.out, "Metrics JSON to write");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (*fit_cmd) return cmd_fit(fit, out);
        if (*pred_cmd) return cmd_predict(pred, out);
        if (*sim_cmd) return cmd_simulate(sim, out);
        if (*eval_cmd) return cmd_evaluate(eval, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return is_input_error(e.code()) ? kExitInput : kExitNumeric;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitInput;
}

}  // namespace spsdr::cli
