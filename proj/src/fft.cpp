#include "fft.hpp"

#include "fdtof/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <memory>
#include <mutex>

namespace fdtof::detail {

namespace {

// fftw_plan_* and fftw_destroy_plan touch global planner state; fftw_execute is reentrant.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwFree {
    void operator()(void* p) const noexcept { fftw_free(p); }
};

} // namespace

std::vector<std::complex<double>> real_dft(std::span<const double> input, std::size_t n_fft) {
    require(n_fft >= input.size() && n_fft >= 2, "FFT length shorter than input");
    const std::size_t n_out = n_fft / 2 + 1;

    std::unique_ptr<double, FftwFree> in(fftw_alloc_real(n_fft));
    std::unique_ptr<fftw_complex, FftwFree> out(fftw_alloc_complex(n_out));
    if (!in || !out) {
        throw std::bad_alloc();
    }

    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(n_fft), in.get(), out.get(), FFTW_ESTIMATE);
    }
    std::fill_n(in.get(), n_fft, 0.0);
    std::copy(input.begin(), input.end(), in.get());
    fftw_execute(plan);
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }

    std::vector<std::complex<double>> result(n_out);
    for (std::size_t k = 0; k < n_out; ++k) {
        result[k] = {out.get()[k][0], out.get()[k][1]};
    }
    return result;
}

} // namespace fdtof::detail
