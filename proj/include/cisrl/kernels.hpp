#pragma once

#include "cisrl/dynamics.hpp"

#include <cstddef>

// Batched arithmetic kernels for the hot loops: viability sweeps evaluate the
// discrete map over millions of (state, input) pairs, and set verification
// evaluates polytope margins over large sample batches. Each kernel has a
// scalar reference implementation and an AVX2 variant selected at runtime.
// The variants are bit-identical by construction (same operation order, exp
// evaluated per lane in libm), so the dispatch choice never changes results.

namespace cisrl::kernels {

enum class Backend { Auto, Scalar, Avx2 };

bool avx2_supported();

// Set the active backend. Auto picks AVX2 when the CPU supports it.
// Throws ConfigError when forcing an unsupported backend.
void set_backend(Backend b);
Backend active_backend();
const char* backend_name();

// One 4th-order step of the undisturbed reactor field for `count` states in
// SoA layout. Tc may vary per element.
void batch_step(const dynamics::CstrConsts& c, const double* ca, const double* T,
                const double* Tc, double* ca_out, double* T_out, size_t count);

// Same map applied to every state with one shared input.
void batch_step_shared_u(const dynamics::CstrConsts& c, const double* ca, const double* T,
                         double Tc, double* ca_out, double* T_out, size_t count);

// Polytope margins max_i(A_i . x - b_i) for `count` 2-D points. A is
// row-major rows x 2. Bit-identical to a naive per-row loop.
void batch_margin2(const double* A, const double* b, size_t rows, const double* x0,
                   const double* x1, double* out, size_t count);

namespace detail {
// Raw variants, exposed for the equivalence tests.
void batch_step_scalar(const dynamics::CstrConsts& c, const double* ca, const double* T,
                       const double* Tc, double* ca_out, double* T_out, size_t count);
void batch_margin2_scalar(const double* A, const double* b, size_t rows, const double* x0,
                          const double* x1, double* out, size_t count);
void batch_step_avx2(const dynamics::CstrConsts& c, const double* ca, const double* T,
                     const double* Tc, double* ca_out, double* T_out, size_t count);
void batch_margin2_avx2(const double* A, const double* b, size_t rows, const double* x0,
                        const double* x1, double* out, size_t count);
} // namespace detail

} // namespace cisrl::kernels
