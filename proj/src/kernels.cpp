#include "hyco/kernels.hpp"

#include <cassert>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hyco::kernels {

namespace {

// Below these sizes a parallel region costs more than the loop it splits.
constexpr std::size_t kMinParallelNodes = 4096;
constexpr double kMinParallelFlops = 1 << 18;

double flops(int rows, int in, int out) { return static_cast<double>(rows) * in * out; }

}  // namespace

FaceCoefficients face_average(const GridField2D& kappa) {
  const Domain2D& d = kappa.domain();
  FaceCoefficients f{d, std::vector<double>(d.nodes(), 0.0), std::vector<double>(d.nodes(), 0.0)};
  for (int j = 0; j < d.ny; ++j) {
    for (int i = 0; i < d.nx; ++i) {
      const std::size_t p = d.index(i, j);
      if (i + 1 < d.nx) f.east[p] = 0.5 * (kappa.at(i, j) + kappa.at(i + 1, j));
      if (j + 1 < d.ny) f.north[p] = 0.5 * (kappa.at(i, j) + kappa.at(i, j + 1));
    }
  }
  return f;
}

namespace {

inline double diffusion_row(const FaceCoefficients& f, std::span<const double> reaction,
                            std::span<const double> u, int i, int j, double ihx2, double ihy2) {
  const Domain2D& d = f.domain;
  const std::size_t p = d.index(i, j);
  const std::size_t w = p - 1, e = p + 1;
  const std::size_t s = p - d.nx, n = p + d.nx;
  const double flux_x = f.east[p] * (u[e] - u[p]) - f.east[w] * (u[p] - u[w]);
  const double flux_y = f.north[p] * (u[n] - u[p]) - f.north[s] * (u[p] - u[s]);
  const double r = reaction.empty() ? 0.0 : reaction[p];
  return -(flux_x * ihx2 + flux_y * ihy2) + r * u[p];
}

inline void zero_boundary(const Domain2D& d, std::span<double> out) {
  for (int i = 0; i < d.nx; ++i) {
    out[d.index(i, 0)] = 0.0;
    out[d.index(i, d.ny - 1)] = 0.0;
  }
  for (int j = 0; j < d.ny; ++j) {
    out[d.index(0, j)] = 0.0;
    out[d.index(d.nx - 1, j)] = 0.0;
  }
}

}  // namespace

void apply_diffusion(const FaceCoefficients& faces, std::span<const double> reaction,
                     std::span<const double> u, std::span<double> out) {
  const Domain2D& d = faces.domain;
  const double ihx2 = 1.0 / (d.hx() * d.hx()), ihy2 = 1.0 / (d.hy() * d.hy());
  zero_boundary(d, out);
#pragma omp parallel for schedule(static) if (d.nodes() >= kMinParallelNodes)
  for (int j = 1; j < d.ny - 1; ++j)
    for (int i = 1; i < d.nx - 1; ++i)
      out[d.index(i, j)] = diffusion_row(faces, reaction, u, i, j, ihx2, ihy2);
}

void apply_diffusion_reference(const FaceCoefficients& faces, std::span<const double> reaction,
                               std::span<const double> u, std::span<double> out) {
  const Domain2D& d = faces.domain;
  const double ihx2 = 1.0 / (d.hx() * d.hx()), ihy2 = 1.0 / (d.hy() * d.hy());
  zero_boundary(d, out);
  for (int j = 1; j < d.ny - 1; ++j)
    for (int i = 1; i < d.nx - 1; ++i)
      out[d.index(i, j)] = diffusion_row(faces, reaction, u, i, j, ihx2, ihy2);
}

std::vector<double> diffusion_diagonal(const FaceCoefficients& faces, std::span<const double> reaction) {
  const Domain2D& d = faces.domain;
  const double ihx2 = 1.0 / (d.hx() * d.hx()), ihy2 = 1.0 / (d.hy() * d.hy());
  std::vector<double> diag(d.nodes(), 1.0);
  for (int j = 1; j < d.ny - 1; ++j) {
    for (int i = 1; i < d.nx - 1; ++i) {
      const std::size_t p = d.index(i, j);
      diag[p] = (faces.east[p] + faces.east[p - 1]) * ihx2 + (faces.north[p] + faces.north[p - d.nx]) * ihy2 +
                (reaction.empty() ? 0.0 : reaction[p]);
    }
  }
  return diag;
}

namespace {

inline void grayscott_node(const Domain2D& d, const GrayScottRates& r, std::span<const double> u,
                           std::span<const double> v, std::span<double> du, std::span<double> dv,
                           int i, int j, double ihx2, double ihy2) {
  const int mx = d.nx - 1, my = d.ny - 1;  // unique nodes per axis
  const std::size_t p = d.index(i, j);
  const std::size_t w = d.index((i + mx - 1) % mx, j), e = d.index((i + 1) % mx, j);
  const std::size_t s = d.index(i, (j + my - 1) % my), n = d.index(i, (j + 1) % my);
  const double lap_u = (u[w] - 2 * u[p] + u[e]) * ihx2 + (u[s] - 2 * u[p] + u[n]) * ihy2;
  const double lap_v = (v[w] - 2 * v[p] + v[e]) * ihx2 + (v[s] - 2 * v[p] + v[n]) * ihy2;
  const double uvv = u[p] * v[p] * v[p];
  du[p] = r.Du * lap_u - uvv + r.F * (1.0 - u[p]);
  dv[p] = r.Dv * lap_v + uvv - (r.F + r.k) * v[p];
}

inline void copy_periodic_images(const Domain2D& d, std::span<double> a) {
  for (int j = 0; j < d.ny - 1; ++j) a[d.index(d.nx - 1, j)] = a[d.index(0, j)];
  for (int i = 0; i < d.nx; ++i) a[d.index(i, d.ny - 1)] = a[d.index(i, 0)];
}

}  // namespace

void grayscott_rhs(const Domain2D& d, const GrayScottRates& r, std::span<const double> u,
                   std::span<const double> v, std::span<double> du, std::span<double> dv) {
  const double ihx2 = 1.0 / (d.hx() * d.hx()), ihy2 = 1.0 / (d.hy() * d.hy());
#pragma omp parallel for schedule(static) if (d.nodes() >= kMinParallelNodes)
  for (int j = 0; j < d.ny - 1; ++j)
    for (int i = 0; i < d.nx - 1; ++i) grayscott_node(d, r, u, v, du, dv, i, j, ihx2, ihy2);
  copy_periodic_images(d, du);
  copy_periodic_images(d, dv);
}

void grayscott_rhs_reference(const Domain2D& d, const GrayScottRates& r, std::span<const double> u,
                             std::span<const double> v, std::span<double> du, std::span<double> dv) {
  const double ihx2 = 1.0 / (d.hx() * d.hx()), ihy2 = 1.0 / (d.hy() * d.hy());
  for (int j = 0; j < d.ny - 1; ++j)
    for (int i = 0; i < d.nx - 1; ++i) grayscott_node(d, r, u, v, du, dv, i, j, ihx2, ihy2);
  copy_periodic_images(d, du);
  copy_periodic_images(d, dv);
}

void affine_batch(std::span<const double> X, int rows, int in, std::span<const double> W,
                  std::span<const double> b, int out, std::span<double> Y) {
  assert(X.size() >= static_cast<std::size_t>(rows) * in);
#pragma omp parallel for schedule(static) if (flops(rows, in, out) >= kMinParallelFlops)
  for (int n = 0; n < rows; ++n) {
    const double* x = &X[static_cast<std::size_t>(n) * in];
    double* y = &Y[static_cast<std::size_t>(n) * out];
    int o = 0;
    // four independent accumulators; each keeps the reference summation order
    for (; o + 4 <= out; o += 4) {
      const double* w0 = &W[static_cast<std::size_t>(o) * in];
      const double *w1 = w0 + in, *w2 = w1 + in, *w3 = w2 + in;
      double a0 = b.empty() ? 0.0 : b[o], a1 = b.empty() ? 0.0 : b[o + 1];
      double a2 = b.empty() ? 0.0 : b[o + 2], a3 = b.empty() ? 0.0 : b[o + 3];
      for (int i = 0; i < in; ++i) {
        a0 += w0[i] * x[i];
        a1 += w1[i] * x[i];
        a2 += w2[i] * x[i];
        a3 += w3[i] * x[i];
      }
      y[o] = a0;
      y[o + 1] = a1;
      y[o + 2] = a2;
      y[o + 3] = a3;
    }
    for (; o < out; ++o) {
      const double* w = &W[static_cast<std::size_t>(o) * in];
      double acc = b.empty() ? 0.0 : b[o];
      for (int i = 0; i < in; ++i) acc += w[i] * x[i];
      y[o] = acc;
    }
  }
}

void affine_batch_reference(std::span<const double> X, int rows, int in, std::span<const double> W,
                            std::span<const double> b, int out, std::span<double> Y) {
  for (int n = 0; n < rows; ++n) {
    for (int o = 0; o < out; ++o) {
      double acc = b.empty() ? 0.0 : b[o];
      for (int i = 0; i < in; ++i) acc += W[static_cast<std::size_t>(o) * in + i] * X[static_cast<std::size_t>(n) * in + i];
      Y[static_cast<std::size_t>(n) * out + o] = acc;
    }
  }
}

void affine_batch_backward(std::span<const double> X, int rows, int in, std::span<const double> W,
                           int out, std::span<const double> dY, std::span<double> dX,
                           std::span<double> dW, std::span<double> db) {
  if (!dX.empty()) {
#pragma omp parallel for schedule(static) if (flops(rows, in, out) >= kMinParallelFlops)
    for (int n = 0; n < rows; ++n) {
      double* dx = &dX[static_cast<std::size_t>(n) * in];
      const double* dy = &dY[static_cast<std::size_t>(n) * out];
      for (int i = 0; i < in; ++i) dx[i] = 0.0;
      for (int o = 0; o < out; ++o) {
        const double g = dy[o];
        if (g == 0.0) continue;
        const double* w = &W[static_cast<std::size_t>(o) * in];
        for (int i = 0; i < in; ++i) dx[i] += g * w[i];
      }
    }
  }
  // Each output row of dW is owned by one thread; rows of the batch are summed in order.
#pragma omp parallel for schedule(static) if (flops(rows, in, out) >= kMinParallelFlops)
  for (int o = 0; o < out; ++o) {
    double* dw = &dW[static_cast<std::size_t>(o) * in];
    double bias_acc = 0.0;
    for (int n = 0; n < rows; ++n) {
      const double g = dY[static_cast<std::size_t>(n) * out + o];
      bias_acc += g;
      if (g == 0.0) continue;
      const double* x = &X[static_cast<std::size_t>(n) * in];
      for (int i = 0; i < in; ++i) dw[i] += g * x[i];
    }
    if (!db.empty()) db[o] += bias_acc;
  }
}

void affine_batch_backward_reference(std::span<const double> X, int rows, int in,
                                     std::span<const double> W, int out, std::span<const double> dY,
                                     std::span<double> dX, std::span<double> dW, std::span<double> db) {
  if (!dX.empty()) {
    for (std::size_t q = 0; q < static_cast<std::size_t>(rows) * in; ++q) dX[q] = 0.0;
    for (int n = 0; n < rows; ++n)
      for (int o = 0; o < out; ++o)
        for (int i = 0; i < in; ++i)
          dX[static_cast<std::size_t>(n) * in + i] += dY[static_cast<std::size_t>(n) * out + o] * W[static_cast<std::size_t>(o) * in + i];
  }
  for (int o = 0; o < out; ++o) {
    double bias_acc = 0.0;
    for (int n = 0; n < rows; ++n) {
      const double g = dY[static_cast<std::size_t>(n) * out + o];
      bias_acc += g;
      for (int i = 0; i < in; ++i) dW[static_cast<std::size_t>(o) * in + i] += g * X[static_cast<std::size_t>(n) * in + i];
    }
    if (!db.empty()) db[o] += bias_acc;
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace hyco::kernels
