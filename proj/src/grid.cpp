#include "hyco/grid.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace hyco {

Domain2D::Domain2D(double x0, double x1, double y0, double y1, int nx_, int ny_)
    : x_min(x0), x_max(x1), y_min(y0), y_max(y1), nx(nx_), ny(ny_) {
  if (!(x0 < x1) || !(y0 < y1)) throw std::invalid_argument("Domain2D: empty box");
  if (nx < 3 || ny < 3) throw std::invalid_argument("Domain2D: need at least 3x3 nodes");
}

bool Domain2D::contains(double px, double py, double slack) const {
  const double sx = slack * (x_max - x_min);
  const double sy = slack * (y_max - y_min);
  return px >= x_min - sx && px <= x_max + sx && py >= y_min - sy && py <= y_max + sy;
}

GridField2D::GridField2D(Domain2D domain, int components)
    : domain_(domain), k_(components), values_(domain.nodes() * components, 0.0) {
  if (components < 1) throw std::invalid_argument("GridField2D: components must be >= 1");
}

GridField2D::GridField2D(Domain2D domain, int components, std::vector<double> values)
    : domain_(domain), k_(components), values_(std::move(values)) {
  if (components < 1) throw std::invalid_argument("GridField2D: components must be >= 1");
  if (values_.size() != domain_.nodes() * k_)
    throw std::invalid_argument("GridField2D: value count does not match grid");
}

namespace {

// Locates the cell containing p along one axis and the local coordinate in [0,1].
inline void locate(double p, double lo, double h, int n, int& cell, double& s) {
  const double r = (p - lo) / h;
  cell = std::clamp(static_cast<int>(std::floor(r)), 0, n - 2);
  s = std::clamp(r - cell, 0.0, 1.0);
}

}  // namespace

void GridField2D::sample_into(double x, double y, std::span<double> out) const {
  if (!domain_.contains(x, y)) {
    std::ostringstream msg;
    msg << "sample point (" << x << ", " << y << ") outside domain";
    throw OutOfDomain(msg.str());
  }
  int i, j;
  double sx, sy;
  locate(x, domain_.x_min, domain_.hx(), domain_.nx, i, sx);
  locate(y, domain_.y_min, domain_.hy(), domain_.ny, j, sy);
  const double w00 = (1 - sx) * (1 - sy), w10 = sx * (1 - sy);
  const double w01 = (1 - sx) * sy, w11 = sx * sy;
  const double* v00 = &values_[domain_.index(i, j) * k_];
  const double* v10 = &values_[domain_.index(i + 1, j) * k_];
  const double* v01 = &values_[domain_.index(i, j + 1) * k_];
  const double* v11 = &values_[domain_.index(i + 1, j + 1) * k_];
  for (int c = 0; c < k_; ++c) out[c] = w00 * v00[c] + w10 * v10[c] + w01 * v01[c] + w11 * v11[c];
}

std::vector<double> GridField2D::sample(double x, double y) const {
  std::vector<double> out(k_);
  sample_into(x, y, out);
  return out;
}

SpaceTimeField::SpaceTimeField(double t0, double t1, std::vector<GridField2D> frames)
    : t0_(t0), t1_(t1), frames_(std::move(frames)) {
  if (!(t0 < t1)) throw std::invalid_argument("SpaceTimeField: t0 must be < t1");
  if (frames_.size() < 2) throw std::invalid_argument("SpaceTimeField: need at least 2 frames");
  for (const auto& f : frames_) {
    if (!(f.domain() == frames_.front().domain()) || f.components() != frames_.front().components())
      throw std::invalid_argument("SpaceTimeField: frames disagree on domain or components");
  }
}

int SpaceTimeField::nearest_frame(double t) const {
  const int n = static_cast<int>(std::lround((t - t0_) / dt()));
  return std::clamp(n, 0, nt() - 1);
}

void SpaceTimeField::sample_into(double x, double y, double t, std::span<double> out) const {
  const double slack = 1e-12 * (t1_ - t0_);
  if (t < t0_ - slack || t > t1_ + slack) {
    std::ostringstream msg;
    msg << "sample time " << t << " outside [" << t0_ << ", " << t1_ << "]";
    throw OutOfDomain(msg.str());
  }
  int n;
  double s;
  locate(t, t0_, dt(), nt(), n, s);
  const int k = components();
  frames_[n].sample_into(x, y, out);
  if (s == 0.0) return;
  double buf[8];
  std::vector<double> heap;
  std::span<double> upper(buf, static_cast<std::size_t>(k));
  if (k > 8) {
    heap.resize(k);
    upper = heap;
  }
  frames_[n + 1].sample_into(x, y, upper);
  for (int c = 0; c < k; ++c) out[c] = (1 - s) * out[c] + s * upper[c];
}

std::vector<double> SpaceTimeField::sample(double x, double y, double t) const {
  std::vector<double> out(components());
  sample_into(x, y, t, out);
  return out;
}

std::vector<double> sample_space(const GridField2D& field, double x, double y) {
  return field.sample(x, y);
}

std::vector<double> sample_spacetime(const SpaceTimeField& series, double x, double y, double t) {
  return series.sample(x, y, t);
}

namespace {

void write_frame_rows(std::ostream& os, const GridField2D& f, const double* t) {
  const auto& d = f.domain();
  for (int j = 0; j < d.ny; ++j) {
    for (int i = 0; i < d.nx; ++i) {
      os << d.x(i) << ',' << d.y(j);
      if (t) os << ',' << *t;
      for (int c = 0; c < f.components(); ++c) os << ',' << f.at(i, j, c);
      os << '\n';
    }
  }
}

void write_header(std::ostream& os, int k, bool with_t) {
  os << "x,y";
  if (with_t) os << ",t";
  for (int c = 0; c < k; ++c) os << ",u" << c;
  os << '\n';
}

}  // namespace

void write_csv(std::ostream& os, const GridField2D& field) {
  const auto old = os.precision(17);
  write_header(os, field.components(), false);
  write_frame_rows(os, field, nullptr);
  os.precision(old);
}

void write_csv(std::ostream& os, const SpaceTimeField& series, int frame_stride) {
  const auto old = os.precision(17);
  write_header(os, series.components(), true);
  for (int n = 0; n < series.nt(); n += std::max(1, frame_stride)) {
    const double t = series.time(n);
    write_frame_rows(os, series.frame(n), &t);
  }
  os.precision(old);
}

}  // namespace hyco
