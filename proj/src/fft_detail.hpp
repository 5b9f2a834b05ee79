#pragma once

#include <functional>

#include "crossdiff/field.hpp"

namespace crossdiff::detail {

/// Zero-pads `field` by at least `pad` cells per side, multiplies its DFT by
/// multiplier(kx, ky) (angular wavenumbers) and returns the box part.
ScalarField apply_fourier_multiplier(const ScalarField& field, int pad,
                                     const std::function<double(double, double)>& multiplier);

}  // namespace crossdiff::detail
