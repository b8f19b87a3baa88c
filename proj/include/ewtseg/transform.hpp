#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "ewtseg/bank.hpp"
#include "ewtseg/fft.hpp"

namespace ewtseg {

/// Full-resolution subband images; plane 0 is the lowpass, then (ring, sector) row-major.
struct CoefficientStack {
    int width = 0;
    int height = 0;
    std::vector<Image> planes;

    [[nodiscard]] int size() const { return static_cast<int>(planes.size()); }
};

inline constexpr double kImaginaryResidueTolerance = 1e-9;

inline CoefficientStack forward(const Image& image, const CurveletBank& bank) {
    if (image.width != bank.width || image.height != bank.height)
        throw InputError("forward: image size does not match the filter bank grid");
    const Fft2D fft(bank.width, bank.height);
    const ComplexGrid spectrum = fft.forward(image);

    double scale = 0.0;
    for (double v : image.data) scale = std::max(scale, std::abs(v));

    CoefficientStack stack{bank.width, bank.height, {}};
    stack.planes.reserve(bank.filters.size());
    ComplexGrid work(bank.width, bank.height);
    for (const auto& filter : bank.filters) {
        for (std::size_t i = 0; i < work.size(); ++i) work.data[i] = spectrum.data[i] * filter.data[i];
        fft.inverse(work);
        Image plane(bank.width, bank.height);
        double residue = 0.0;
        for (std::size_t i = 0; i < work.size(); ++i) {
            plane.data[i] = work.data[i].real();
            residue = std::max(residue, std::abs(work.data[i].imag()));
        }
        if (residue > kImaginaryResidueTolerance * std::max(scale, 1e-300) && residue > 1e-300)
            throw NumericalError("forward: filter is not Hermitian-symmetric (imaginary residue)");
        stack.planes.push_back(std::move(plane));
    }
    return stack;
}

/// Dual-frame reconstruction; with a tight frame the normalizing denominator is 1.
inline Image inverse(const CoefficientStack& stack, const CurveletBank& bank) {
    if (stack.width != bank.width || stack.height != bank.height || stack.size() != bank.size())
        throw InputError("inverse: coefficient stack does not match the filter bank");
    const Fft2D fft(bank.width, bank.height);
    ComplexGrid acc(bank.width, bank.height);
    std::vector<double> denom(acc.size(), 0.0);
    for (int k = 0; k < stack.size(); ++k) {
        const ComplexGrid f = fft.forward(stack.planes[k]);
        const auto& h = bank.filters[k].data;
        for (std::size_t i = 0; i < acc.size(); ++i) {
            acc.data[i] += f.data[i] * h[i];
            denom[i] += h[i] * h[i];
        }
    }
    for (std::size_t i = 0; i < acc.size(); ++i) acc.data[i] = denom[i] > 1e-12 ? acc.data[i] / denom[i] : 0.0;
    fft.inverse(acc);
    Image out(bank.width, bank.height);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = acc.data[i].real();
    return out;
}

}  // namespace ewtseg
