#pragma once

// Thin RAII wrapper around FFTW's complex 2D transforms.

#include <complex>
#include <memory>
#include <mutex>
#include <vector>

#include <fftw3.h>

#include "ewtseg/common.hpp"

namespace ewtseg {

using ComplexGrid = Grid<std::complex<double>>;

namespace detail {

// FFTW's planner is not reentrant; execution on distinct arrays is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

struct PlanDeleter {
    void operator()(fftw_plan_s* p) const {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(p);
    }
};

}  // namespace detail

/// Unnormalized forward / normalized inverse 2D DFT of fixed size.
class Fft2D {
public:
    Fft2D(int width, int height) : width_(width), height_(height) {
        if (width <= 0 || height <= 0) throw InputError("FFT size must be positive");
        ComplexGrid scratch(width, height);
        auto* buf = reinterpret_cast<fftw_complex*>(scratch.data.data());
        std::lock_guard lock(detail::fftw_planner_mutex());
        forward_.reset(fftw_plan_dft_2d(height, width, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED));
        backward_.reset(fftw_plan_dft_2d(height, width, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED));
    }

    [[nodiscard]] int width() const { return width_; }
    [[nodiscard]] int height() const { return height_; }

    void forward(ComplexGrid& g) const { run(forward_.get(), g); }

    void inverse(ComplexGrid& g) const {
        run(backward_.get(), g);
        const double scale = 1.0 / static_cast<double>(g.size());
        for (auto& v : g.data) v *= scale;
    }

    [[nodiscard]] ComplexGrid forward(const Image& img) const {
        ComplexGrid g(img.width, img.height);
        for (std::size_t i = 0; i < img.size(); ++i) g.data[i] = img.data[i];
        forward(g);
        return g;
    }

private:
    void run(fftw_plan p, ComplexGrid& g) const {
        if (g.width != width_ || g.height != height_) throw InputError("FFT size mismatch");
        auto* buf = reinterpret_cast<fftw_complex*>(g.data.data());
        fftw_execute_dft(p, buf, buf);
    }

    int width_;
    int height_;
    std::unique_ptr<fftw_plan_s, detail::PlanDeleter> forward_;
    std::unique_ptr<fftw_plan_s, detail::PlanDeleter> backward_;
};

/// Signed frequency index for DFT bin k of an n-point transform.
inline int signed_frequency(int k, int n) { return k <= n / 2 ? k : k - n; }

}  // namespace ewtseg
