#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hyco {

struct OutOfDomain : std::out_of_range {
  using std::out_of_range::out_of_range;
};

/// Query location; t is ignored by static fields.
struct Point {
  double x = 0.0, y = 0.0, t = 0.0;
};

/// Uniform node-centred grid over [x_min, x_max] x [y_min, y_max].
/// nx and ny count boundary nodes, so the spacing is (x_max - x_min) / (nx - 1).
struct Domain2D {
  double x_min = 0.0, x_max = 1.0;
  double y_min = 0.0, y_max = 1.0;
  int nx = 3, ny = 3;

  Domain2D() = default;
  Domain2D(double x0, double x1, double y0, double y1, int nx_, int ny_);

  double hx() const { return (x_max - x_min) / (nx - 1); }
  double hy() const { return (y_max - y_min) / (ny - 1); }
  double x(int i) const { return x_min + i * hx(); }
  double y(int j) const { return y_min + j * hy(); }
  std::size_t nodes() const { return static_cast<std::size_t>(nx) * ny; }
  // Row-major by node: j is the slow (row) index, i the fast one.
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }
  bool contains(double px, double py, double slack = 1e-12) const;

  bool operator==(const Domain2D&) const = default;
};

/// k-component field stored node-major: values[index(i,j) * k + c].
class GridField2D {
 public:
  GridField2D() = default;
  GridField2D(Domain2D domain, int components);
  GridField2D(Domain2D domain, int components, std::vector<double> values);

  const Domain2D& domain() const { return domain_; }
  int components() const { return k_; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  double& at(int i, int j, int c = 0) { return values_[domain_.index(i, j) * k_ + c]; }
  double at(int i, int j, int c = 0) const { return values_[domain_.index(i, j) * k_ + c]; }

  // Bilinear interpolation; throws OutOfDomain outside the closed box.
  std::vector<double> sample(double x, double y) const;
  void sample_into(double x, double y, std::span<double> out) const;

 private:
  Domain2D domain_;
  int k_ = 1;
  std::vector<double> values_;
};

/// Evenly spaced frames on [t0, t1]; frame n sits at t0 + n (t1 - t0) / (nt - 1).
class SpaceTimeField {
 public:
  SpaceTimeField() = default;
  SpaceTimeField(double t0, double t1, std::vector<GridField2D> frames);

  double t0() const { return t0_; }
  double t1() const { return t1_; }
  int nt() const { return static_cast<int>(frames_.size()); }
  double dt() const { return (t1_ - t0_) / (nt() - 1); }
  double time(int n) const { return t0_ + n * dt(); }
  const Domain2D& domain() const { return frames_.front().domain(); }
  int components() const { return frames_.front().components(); }
  const GridField2D& frame(int n) const { return frames_[n]; }
  const std::vector<GridField2D>& frames() const { return frames_; }
  int nearest_frame(double t) const;

  std::vector<double> sample(double x, double y, double t) const;
  void sample_into(double x, double y, double t, std::span<double> out) const;

 private:
  double t0_ = 0.0, t1_ = 1.0;
  std::vector<GridField2D> frames_;
};

std::vector<double> sample_space(const GridField2D& field, double x, double y);
std::vector<double> sample_spacetime(const SpaceTimeField& series, double x, double y, double t);

// CSV: one row per node, "x,y[,t],c0,c1,...".
void write_csv(std::ostream& os, const GridField2D& field);
void write_csv(std::ostream& os, const SpaceTimeField& series, int frame_stride = 1);

}  // namespace hyco
