#pragma once

#include "spsdr/types.hpp"

#include <string_view>
#include <vector>

namespace spsdr {

enum class BasisKind { polynomial, slice };

std::string_view to_string(BasisKind kind) noexcept;
BasisKind parse_basis_kind(std::string_view text);

/// Inverse-regression basis f_Y. For the slice kind `r` is the number of
/// slices minus one; `slice_bounds` holds all r+2 slice edges (training
/// minimum, interior cuts, training maximum) once fitted.
struct BasisSpec {
    BasisKind kind = BasisKind::polynomial;
    int r = 2;
    std::vector<double> slice_bounds;

    [[nodiscard]] int slices() const { return r + 1; }
};

/// Centered basis matrix. `f` is centered but not scaled; `column_scales`
/// are the standard deviations the fitters divide by (1 for slices).
struct FMatrix {
    Matrix f;
    Vector column_means;
    Vector column_scales;
    BasisSpec spec;  ///< with slice bounds filled in

    [[nodiscard]] Matrix scaled() const;
};

/// Raw (uncentered) basis rows. For slices the spec must carry bounds.
Matrix raw_basis(const Vector& y, const BasisSpec& spec);

FMatrix build_f(const Vector& y, const BasisSpec& spec);

struct BasisValue {
    Vector value;
    bool out_of_range = false;  ///< slice kind: y_new fell outside the training range
};

/// Basis at a new response minus the stored column means.
BasisValue eval_f(double y_new, const BasisSpec& spec, const Vector& column_means);

}  // namespace spsdr
