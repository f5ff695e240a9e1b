#include "spsdr/basis.hpp"

#include "spsdr/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace spsdr {

std::string_view to_string(BasisKind kind) noexcept {
    return kind == BasisKind::polynomial ? "polynomial" : "slice";
}

BasisKind parse_basis_kind(std::string_view text) {
    if (text == "polynomial" || text == "poly") return BasisKind::polynomial;
    if (text == "slice") return BasisKind::slice;
    throw Error(ErrorCode::InvalidArgument, "unknown basis kind '" + std::string(text) + "'");
}

namespace {

// Slice index for a value given r+2 edges; values outside the edges go to the
// nearest end slice.
int slice_of(double v, const std::vector<double>& edges, bool& out_of_range) {
    const int h = static_cast<int>(edges.size()) - 1;
    out_of_range = v < edges.front() || v > edges.back();
    for (int j = 0; j < h - 1; ++j) {
        if (v <= edges[static_cast<std::size_t>(j + 1)]) {
            return j;
        }
    }
    return h - 1;
}

std::vector<double> equal_frequency_edges(const Vector& y, int slices) {
    const Index n = y.size();
    std::vector<double> sorted(y.data(), y.data() + n);
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> edges;
    edges.reserve(static_cast<std::size_t>(slices + 1));
    edges.push_back(sorted.front());
    for (int j = 1; j < slices; ++j) {
        // Rank position i goes to slice floor(i * h / n); cut halfway between
        // the last member of slice j-1 and the first member of slice j.
        const auto first = static_cast<std::size_t>((static_cast<long long>(j) * n + slices - 1) / slices);
        const double cut = 0.5 * (sorted[first - 1] + sorted[first]);
        edges.push_back(cut);
    }
    edges.push_back(sorted.back());
    return edges;
}

}  // namespace

Matrix raw_basis(const Vector& y, const BasisSpec& spec) {
    const Index n = y.size();
    Matrix f(n, spec.r);
    if (spec.kind == BasisKind::polynomial) {
        for (Index i = 0; i < n; ++i) {
            double power = 1.0;
            for (int j = 0; j < spec.r; ++j) {
                power *= y(i);
                f(i, j) = power;
            }
        }
        return f;
    }
    if (static_cast<int>(spec.slice_bounds.size()) != spec.r + 2) {
        throw Error(ErrorCode::InvalidArgument, "slice basis needs r + 2 slice edges");
    }
    f.setZero();
    for (Index i = 0; i < n; ++i) {
        bool outside = false;
        const int s = slice_of(y(i), spec.slice_bounds, outside);
        if (s < spec.r) {
            f(i, s) = 1.0;
        }
    }
    return f;
}

Matrix FMatrix::scaled() const {
    return f * column_scales.cwiseInverse().asDiagonal();
}

FMatrix build_f(const Vector& y, const BasisSpec& spec) {
    const Index n = y.size();
    if (spec.r < 1) {
        throw Error(ErrorCode::InvalidArgument, "basis size r must be at least 1");
    }
    if (n <= spec.r) {
        throw Error(ErrorCode::RankDeficientF, "need more observations than basis columns");
    }
    if (!y.allFinite()) {
        throw Error(ErrorCode::InvalidArgument, "response contains non-finite values");
    }
    if (y.maxCoeff() == y.minCoeff()) {
        throw Error(ErrorCode::ConstantResponse, "response is constant");
    }

    FMatrix out;
    out.spec = spec;
    if (spec.kind == BasisKind::slice) {
        if (spec.slice_bounds.empty()) {
            out.spec.slice_bounds = equal_frequency_edges(y, spec.slices());
        }
        const auto& edges = out.spec.slice_bounds;
        if (static_cast<int>(edges.size()) != spec.r + 2) {
            throw Error(ErrorCode::InvalidArgument, "slice basis needs r + 2 slice edges");
        }
        for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
            if (!(edges[k] < edges[k + 1])) {
                throw Error(ErrorCode::InvalidArgument, "slice edges must be strictly increasing");
            }
        }
    }

    Matrix raw = raw_basis(y, out.spec);
    out.column_means = raw.colwise().mean().transpose();
    out.f = raw.rowwise() - out.column_means.transpose();
    out.column_scales = Vector::Ones(spec.r);
    if (spec.kind == BasisKind::polynomial) {
        for (int j = 0; j < spec.r; ++j) {
            const double sd = std::sqrt(out.f.col(j).squaredNorm() / static_cast<double>(n));
            if (sd > 0.0) {
                out.column_scales(j) = sd;
            }
        }
    }

    Eigen::ColPivHouseholderQR<Matrix> qr(out.scaled());
    qr.setThreshold(1e-10);
    if (qr.rank() < spec.r) {
        throw Error(ErrorCode::RankDeficientF, "centered basis has rank " + std::to_string(qr.rank()) +
                                                   " < r = " + std::to_string(spec.r));
    }
    return out;
}

BasisValue eval_f(double y_new, const BasisSpec& spec, const Vector& column_means) {
    if (column_means.size() != spec.r) {
        throw Error(ErrorCode::InvalidArgument, "column means do not match basis size");
    }
    BasisValue out;
    out.value.resize(spec.r);
    if (spec.kind == BasisKind::polynomial) {
        double power = 1.0;
        for (int j = 0; j < spec.r; ++j) {
            power *= y_new;
            out.value(j) = power;
        }
    } else {
        if (static_cast<int>(spec.slice_bounds.size()) != spec.r + 2) {
            throw Error(ErrorCode::InvalidArgument, "slice basis needs fitted slice edges");
        }
        out.value.setZero();
        const int s = slice_of(y_new, spec.slice_bounds, out.out_of_range);
        if (s < spec.r) {
            out.value(s) = 1.0;
        }
    }
    out.value -= column_means;
    return out;
}

}  // namespace spsdr
