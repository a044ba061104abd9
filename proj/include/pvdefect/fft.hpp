#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>

namespace pvdefect::fft {

// The FFTW planner is not re-entrant; execution on distinct buffers is.
inline std::mutex& planner_mutex() {
    static std::mutex mu;
    return mu;
}

struct FftwFree {
    void operator()(void* p) const noexcept { fftw_free(p); }
};

using RealBuffer = std::unique_ptr<double[], FftwFree>;
using ComplexBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

inline RealBuffer alloc_real(std::size_t n) {
    return RealBuffer(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
}
inline ComplexBuffer alloc_complex(std::size_t n) {
    return ComplexBuffer(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n)));
}

/// Smallest n' >= n whose only prime factors are 2, 3 and 5.
inline int smooth_size(int n) {
    for (int m = n;; ++m) {
        int r = m;
        for (int p : {2, 3, 5})
            while (r % p == 0) r /= p;
        if (r == 1) return m;
    }
}

/// Owning 2-D real<->complex plan pair of fixed size rows x cols.
class Plan2d {
public:
    Plan2d(int rows, int cols) : rows_(rows), cols_(cols) {
        real_ = alloc_real(real_size());
        spec_ = alloc_complex(complex_size());
        std::lock_guard lock(planner_mutex());
        fwd_ = fftw_plan_dft_r2c_2d(rows, cols, real_.get(), spec_.get(), FFTW_ESTIMATE);
        inv_ = fftw_plan_dft_c2r_2d(rows, cols, spec_.get(), real_.get(), FFTW_ESTIMATE);
    }
    ~Plan2d() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(inv_);
    }
    Plan2d(const Plan2d&) = delete;
    Plan2d& operator=(const Plan2d&) = delete;

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t real_size() const { return static_cast<std::size_t>(rows_) * cols_; }
    std::size_t complex_size() const { return static_cast<std::size_t>(rows_) * (cols_ / 2 + 1); }

    double* real() { return real_.get(); }
    fftw_complex* spectrum() { return spec_.get(); }

    /// real() -> spectrum(); real() is clobbered.
    void forward() { fftw_execute(fwd_); }
    /// spectrum() -> real(), unnormalised; spectrum() is clobbered.
    void inverse() { fftw_execute(inv_); }

private:
    int rows_, cols_;
    RealBuffer real_;
    ComplexBuffer spec_;
    fftw_plan fwd_ = nullptr;
    fftw_plan inv_ = nullptr;
};

}  // namespace pvdefect::fft
