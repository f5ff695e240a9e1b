#include "spsdr/io.hpp"

#include "spsdr/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>

namespace spsdr::io {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

[[noreturn]] void parse_error(std::size_t row, const std::string& what) {
    throw Error(ErrorCode::ParseError, "row " + std::to_string(row) + ": " + what);
}

double parse_cell(std::string_view cell, std::size_t row) {
    if (cell.empty()) {
        parse_error(row, "missing value");
    }
    if (cell.front() == '+') cell.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        parse_error(row, "'" + std::string(cell) + "' is not a number");
    }
    if (!std::isfinite(value)) {
        parse_error(row, "non-finite value");
    }
    return value;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

Table parse_table(const std::string& text) {
    Table table;
    std::istringstream in(text);
    std::string line;
    std::size_t row = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto cells = split_commas(line);
        if (!have_header) {
            for (auto c : cells) table.header.push_back(lower(c));
            have_header = true;
            continue;
        }
        if (cells.size() != table.header.size()) {
            parse_error(row, "expected " + std::to_string(table.header.size()) + " columns, found " +
                                 std::to_string(cells.size()));
        }
        std::vector<double> values;
        values.reserve(cells.size());
        for (auto c : cells) values.push_back(parse_cell(c, row));
        table.rows.push_back(std::move(values));
    }
    if (!have_header) {
        throw Error(ErrorCode::ParseError, "file is empty");
    }
    return table;
}

Json num(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

double get_num(const Json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
    }
    throw Error(ErrorCode::ParseError, "expected a number, found " + j.dump());
}

Json vector_to_json(const Vector& v) {
    Json arr = Json::array();
    for (Index i = 0; i < v.size(); ++i) arr.push_back(num(v(i)));
    return arr;
}

Vector vector_from_json(const Json& j) {
    if (!j.is_array()) throw Error(ErrorCode::ParseError, "expected an array");
    Vector v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = get_num(j[i]);
    return v;
}

template <class T>
Json optional_num(const std::optional<T>& v) {
    return v ? num(*v) : Json(nullptr);
}

std::optional<double> optional_from(const Json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return get_num(j.at(key));
}

Json fit_to_json(const ReductionFit& fit) {
    Json j;
    j["kind"] = std::string(to_string(fit.kind));
    j["d"] = fit.d();
    j["r"] = fit.r();
    j["spatial_param"] = num(fit.spatial_param);
    j["d_max"] = num(fit.d_max);
    j["loglik"] = num(fit.loglik);
    Json basis;
    basis["kind"] = std::string(to_string(fit.basis.spec.kind));
    basis["r"] = fit.basis.spec.r;
    Json bounds = Json::array();
    for (double b : fit.basis.spec.slice_bounds) bounds.push_back(num(b));
    basis["slice_bounds"] = bounds;
    basis["column_means"] = vector_to_json(fit.basis.column_means);
    basis["column_scales"] = vector_to_json(fit.basis.column_scales);
    j["basis"] = basis;
    j["mu_hat"] = vector_to_json(fit.mu_hat);
    j["a_hat"] = matrix_to_json(fit.est.a_hat);
    j["b_hat"] = matrix_to_json(fit.est.b_hat);
    j["delta_hat"] = matrix_to_json(fit.est.delta_hat);
    j["delta_ls"] = matrix_to_json(fit.est.delta_ls);
    j["c_ls"] = matrix_to_json(fit.est.c_ls);
    j["eigvals"] = vector_to_json(fit.est.eigvals);
    Json grid = Json::array();
    for (const auto& g : fit.grid) grid.push_back(Json::array({num(g.parameter), num(g.loglik)}));
    j["grid"] = grid;
    return j;
}

ReductionFit fit_from_json(const Json& j) {
    ReductionFit fit;
    fit.kind = parse_model_kind(j.at("kind").get<std::string>());
    fit.spatial_param = get_num(j.at("spatial_param"));
    fit.d_max = get_num(j.at("d_max"));
    fit.loglik = get_num(j.at("loglik"));
    const Json& basis = j.at("basis");
    fit.basis.spec.kind = parse_basis_kind(basis.at("kind").get<std::string>());
    fit.basis.spec.r = basis.at("r").get<int>();
    for (const auto& b : basis.at("slice_bounds")) fit.basis.spec.slice_bounds.push_back(get_num(b));
    fit.basis.column_means = vector_from_json(basis.at("column_means"));
    fit.basis.column_scales = vector_from_json(basis.at("column_scales"));
    fit.mu_hat = vector_from_json(j.at("mu_hat"));
    fit.est.a_hat = matrix_from_json(j.at("a_hat"));
    fit.est.b_hat = matrix_from_json(j.at("b_hat"));
    fit.est.delta_hat = matrix_from_json(j.at("delta_hat"));
    fit.est.delta_ls = matrix_from_json(j.at("delta_ls"));
    fit.est.c_ls = matrix_from_json(j.at("c_ls"));
    fit.est.eigvals = vector_from_json(j.at("eigvals"));
    fit.est.d = j.at("d").get<int>();
    for (const auto& g : j.at("grid")) fit.grid.push_back({get_num(g.at(0)), get_num(g.at(1))});

    const Index p = fit.mu_hat.size();
    if (fit.est.a_hat.rows() != p || fit.est.a_hat.cols() != fit.est.d || fit.est.delta_hat.rows() != p ||
        fit.est.delta_hat.cols() != p || fit.est.b_hat.rows() != fit.est.d) {
        throw Error(ErrorCode::ParseError, "model file matrices have inconsistent dimensions");
    }
    return fit;
}

}  // namespace

// Files ---------------------------------------------------------------------

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    const auto parent = path.parent_path();
    std::error_code ec;
    if (!parent.empty()) {
        std::filesystem::create_directories(parent, ec);
    }
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
        }
        out << content;
        out.flush();
        if (!out) {
            throw Error(ErrorCode::IoError, "write failed for " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw Error(ErrorCode::IoError, "cannot rename onto " + path.string() + ": " + ec.message());
    }
}

// CSV -----------------------------------------------------------------------

SpatialSample Dataset::sample() const {
    if (!y) {
        throw Error(ErrorCode::InvalidArgument, "dataset has no y column");
    }
    SpatialSample s{coords, x, *y};
    s.validate();
    return s;
}

Dataset parse_dataset_csv(const std::string& text, bool require_y) {
    const Table table = parse_table(text);
    const auto& h = table.header;
    if (h.size() < 3 || h[0] != "s1" || h[1] != "s2") {
        throw Error(ErrorCode::ParseError, "header must start with s1,s2");
    }
    const bool has_y = h[2] == "y";
    if (require_y && !has_y) {
        throw Error(ErrorCode::ParseError, "header has no y column");
    }
    const std::size_t first_x = has_y ? 3 : 2;
    if (h.size() <= first_x) {
        throw Error(ErrorCode::ParseError, "no predictor columns");
    }
    for (std::size_t c = first_x; c < h.size(); ++c) {
        if (h[c] == "y") throw Error(ErrorCode::ParseError, "y must be the third column");
    }
    if (table.rows.empty()) {
        throw Error(ErrorCode::ParseError, "no data rows");
    }

    const auto n = static_cast<Index>(table.rows.size());
    const auto p = static_cast<Index>(h.size() - first_x);
    Dataset out;
    out.coords.resize(n, 2);
    out.x.resize(n, p);
    if (has_y) out.y = Vector(n);
    for (Index i = 0; i < n; ++i) {
        const auto& row = table.rows[static_cast<std::size_t>(i)];
        out.coords(i, 0) = row[0];
        out.coords(i, 1) = row[1];
        if (has_y) (*out.y)(i) = row[2];
        for (Index k = 0; k < p; ++k) out.x(i, k) = row[first_x + static_cast<std::size_t>(k)];
    }
    return out;
}

Dataset read_dataset_csv(const std::filesystem::path& path, bool require_y) {
    return parse_dataset_csv(read_file(path), require_y);
}

namespace {

std::string write_rows(const Matrix& coords, const Vector* y, const Matrix& x) {
    std::string out = "s1,s2";
    if (y) out += ",y";
    for (Index k = 0; k < x.cols(); ++k) out += ",x" + std::to_string(k + 1);
    out += '\n';
    for (Index i = 0; i < x.rows(); ++i) {
        out += format_double(coords(i, 0));
        out += ',';
        out += format_double(coords(i, 1));
        if (y) {
            out += ',';
            out += format_double((*y)(i));
        }
        for (Index k = 0; k < x.cols(); ++k) {
            out += ',';
            out += format_double(x(i, k));
        }
        out += '\n';
    }
    return out;
}

}  // namespace

std::string dataset_csv(const SpatialSample& sample) { return write_rows(sample.coords, &sample.y, sample.x); }

std::string dataset_csv(const Matrix& coords, const Matrix& x) { return write_rows(coords, nullptr, x); }

std::string predictions_csv(const Matrix& coords, const std::vector<Prediction>& predictions) {
    std::string out = "s1,s2,y_hat,fallback_flag\n";
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const auto r = static_cast<Index>(i);
        out += format_double(coords(r, 0)) + ',' + format_double(coords(r, 1)) + ',' +
               format_double(predictions[i].y_hat) + ',' + (predictions[i].fallback ? "1" : "0") + '\n';
    }
    return out;
}

ScoredColumn read_value_column(const std::filesystem::path& path, const std::vector<std::string>& names) {
    const Table table = parse_table(read_file(path));
    const auto& h = table.header;
    if (h.size() < 3 || h[0] != "s1" || h[1] != "s2") {
        throw Error(ErrorCode::ParseError, path.string() + ": header must start with s1,s2");
    }
    std::size_t col = h.size();
    for (const auto& name : names) {
        const auto it = std::find(h.begin(), h.end(), name);
        if (it != h.end()) {
            col = static_cast<std::size_t>(it - h.begin());
            break;
        }
    }
    if (col == h.size()) {
        throw Error(ErrorCode::ParseError, path.string() + ": no value column");
    }
    ScoredColumn out;
    const auto n = static_cast<Index>(table.rows.size());
    out.coords.resize(n, 2);
    out.values.resize(n);
    for (Index i = 0; i < n; ++i) {
        const auto& row = table.rows[static_cast<std::size_t>(i)];
        out.coords(i, 0) = row[0];
        out.coords(i, 1) = row[1];
        out.values(i) = row[col];
    }
    return out;
}

// JSON ----------------------------------------------------------------------

Json matrix_to_json(const Matrix& m) {
    Json j;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    Json data = Json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index k = 0; k < m.cols(); ++k) data.push_back(num(m(i, k)));
    }
    j["data"] = data;
    return j;
}

Matrix matrix_from_json(const Json& j) {
    const auto rows = j.at("rows").get<Index>();
    const auto cols = j.at("cols").get<Index>();
    const Json& data = j.at("data");
    if (rows < 0 || cols < 0 || static_cast<Index>(data.size()) != rows * cols) {
        throw Error(ErrorCode::ParseError, "matrix data length does not match its dimensions");
    }
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        for (Index k = 0; k < cols; ++k) m(i, k) = get_num(data[static_cast<std::size_t>(i * cols + k)]);
    }
    return m;
}

std::string ModelFile::kind_name() const { return fit ? std::string(to_string(fit->kind)) : "full"; }

Json to_json(const ModelFile& model) {
    Json j;
    j["format"] = "spsdr-model";
    j["version"] = model.version;
    j["library_version"] = model.library_version;
    j["kind"] = model.kind_name();
    j["seed"] = model.seed;
    j["fit"] = model.fit ? fit_to_json(*model.fit) : Json(nullptr);
    Json ref;
    ref["points"] = matrix_to_json(model.reference.points);
    ref["responses"] = vector_to_json(model.reference.responses);
    ref["coords"] = matrix_to_json(model.reference.coords);
    j["training"] = ref;
    Json bw;
    bw["h1"] = optional_num(model.h1);
    bw["h2"] = optional_num(model.h2);
    j["bandwidths"] = bw;
    return j;
}

ModelFile model_from_json(const Json& j) {
    try {
        if (j.value("format", std::string()) != "spsdr-model") {
            throw Error(ErrorCode::ParseError, "not a model file");
        }
        ModelFile model;
        model.version = j.at("version").get<int>();
        if (model.version != kModelFileVersion) {
            throw Error(ErrorCode::ParseError, "unsupported model file version " + std::to_string(model.version));
        }
        model.library_version = j.at("library_version").get<std::string>();
        model.seed = j.at("seed").get<std::uint64_t>();
        const auto kind = j.at("kind").get<std::string>();
        if (!j.at("fit").is_null()) {
            model.fit = fit_from_json(j.at("fit"));
            if (model.kind_name() != kind) throw Error(ErrorCode::ParseError, "model kind mismatch");
        } else if (kind != "full") {
            throw Error(ErrorCode::ParseError, "model of kind " + kind + " has no fit");
        }
        const Json& ref = j.at("training");
        model.reference.points = matrix_from_json(ref.at("points"));
        model.reference.responses = vector_from_json(ref.at("responses"));
        model.reference.coords = matrix_from_json(ref.at("coords"));
        model.reference.validate();
        const Json& bw = j.at("bandwidths");
        model.h1 = optional_from(bw, "h1");
        model.h2 = optional_from(bw, "h2");
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("model file: ") + e.what());
    }
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void save_model(const std::filesystem::path& path, const ModelFile& model) {
    write_file_atomic(path, dump(to_json(model)));
}

ModelFile load_model(const std::filesystem::path& path) {
    Json j;
    try {
        j = Json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
    return model_from_json(j);
}

Json to_json(const MetricsReport& report) {
    const SimConfig& c = report.config;
    Json j;
    j["format"] = "spsdr-metrics";
    j["library_version"] = SPSDR_VERSION;
    Json cfg;
    cfg["n"] = c.n;
    cfg["p"] = c.p;
    cfg["r"] = c.r;
    cfg["d"] = c.d;
    cfg["model"] = std::string(to_string(c.model));
    cfg["lambda"] = num(c.lambda);
    cfg["theta"] = num(c.theta);
    cfg["reps"] = c.reps;
    cfg["train_frac"] = num(c.train_frac);
    cfg["seed"] = c.seed;
    cfg["locations"] = std::string(to_string(c.locations));
    cfg["lambda_grid"] = vector_to_json(Eigen::Map<const Vector>(c.lambda_grid.data(), static_cast<Index>(c.lambda_grid.size())));
    cfg["theta_grid"] = vector_to_json(Eigen::Map<const Vector>(c.theta_grid.data(), static_cast<Index>(c.theta_grid.size())));
    cfg["cv_folds"] = c.cv_folds;
    j["config"] = cfg;
    j["d_policy"] = report.d_policy;
    j["replication_seeds"] = report.replication_seeds;

    Json summary = Json::array();
    Json methods = Json::array();
    for (const auto& m : report.methods) {
        summary.push_back({{"method", m.method}, {"mean", num(m.mean)}, {"sd", num(m.sd)},
                           {"failures", m.failures}, {"unstable", m.unstable}});
        Json mj;
        mj["method"] = m.method;
        Json mse = Json::array();
        Json h1 = Json::array();
        Json h2 = Json::array();
        for (std::size_t i = 0; i < m.mse.size(); ++i) {
            mse.push_back(num(m.mse[i]));
            h1.push_back(num(m.h1[i]));
            h2.push_back(num(m.h2[i]));
        }
        mj["mse"] = mse;
        mj["d_selected"] = m.d_selected;
        mj["h1"] = h1;
        mj["h2"] = h2;
        methods.push_back(mj);
    }
    j["summary"] = summary;
    j["replications"] = methods;
    Json params;
    const char* names[3] = {"ind", "sscm", "sem"};
    for (std::size_t k = 0; k < report.spatial_params.size() && k < 3; ++k) {
        Json arr = Json::array();
        for (double v : report.spatial_params[k]) arr.push_back(num(v));
        params[names[k]] = arr;
    }
    j["spatial_params"] = params;
    j["any_unstable"] = report.any_unstable();
    return j;
}

}  // namespace spsdr::io
