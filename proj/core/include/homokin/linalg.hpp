#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>

// Small fixed-size linear algebra for 3x3 deformation work. Deliberately no
// general-n support: everything in this toolkit lives in R^3 or R^3 x R^3.

namespace homokin {

struct Vec3 {
  double x = 0, y = 0, z = 0;

  double& operator[](std::size_t i) { return i == 0 ? x : (i == 1 ? y : z); }
  double operator[](std::size_t i) const { return i == 0 ? x : (i == 1 ? y : z); }

  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }
};

inline Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
inline Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
inline Vec3 operator*(double s, Vec3 a) { return a *= s; }
inline Vec3 operator*(Vec3 a, double s) { return a *= s; }
inline Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm2(const Vec3& a) { return dot(a, a); }
inline double norm(const Vec3& a) { return std::sqrt(norm2(a)); }

struct Mat3 {
  // row-major
  std::array<double, 9> m{};

  double& operator()(std::size_t r, std::size_t c) { return m[3 * r + c]; }
  double operator()(std::size_t r, std::size_t c) const { return m[3 * r + c]; }

  static Mat3 identity() {
    Mat3 I;
    I(0, 0) = I(1, 1) = I(2, 2) = 1.0;
    return I;
  }
  static Mat3 zero() { return Mat3{}; }

  Mat3& operator+=(const Mat3& o) {
    for (std::size_t i = 0; i < 9; ++i) m[i] += o.m[i];
    return *this;
  }
  Mat3& operator-=(const Mat3& o) {
    for (std::size_t i = 0; i < 9; ++i) m[i] -= o.m[i];
    return *this;
  }
  Mat3& operator*=(double s) {
    for (std::size_t i = 0; i < 9; ++i) m[i] *= s;
    return *this;
  }
};

inline Mat3 operator+(Mat3 a, const Mat3& b) { return a += b; }
inline Mat3 operator-(Mat3 a, const Mat3& b) { return a -= b; }
inline Mat3 operator*(double s, Mat3 a) { return a *= s; }
inline Mat3 operator*(Mat3 a, double s) { return a *= s; }

inline Mat3 operator*(const Mat3& a, const Mat3& b) {
  Mat3 r;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      double s = 0;
      for (std::size_t k = 0; k < 3; ++k) s += a(i, k) * b(k, j);
      r(i, j) = s;
    }
  return r;
}

inline Vec3 operator*(const Mat3& a, const Vec3& v) {
  return {a(0, 0) * v.x + a(0, 1) * v.y + a(0, 2) * v.z,
          a(1, 0) * v.x + a(1, 1) * v.y + a(1, 2) * v.z,
          a(2, 0) * v.x + a(2, 1) * v.y + a(2, 2) * v.z};
}

inline Mat3 transpose(const Mat3& a) {
  Mat3 r;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) r(i, j) = a(j, i);
  return r;
}

inline double trace(const Mat3& a) { return a(0, 0) + a(1, 1) + a(2, 2); }

inline double det(const Mat3& a) {
  return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
         a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
         a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
}

inline double frobenius_norm(const Mat3& a) {
  double s = 0;
  for (double v : a.m) s += v * v;
  return std::sqrt(s);
}

// sum_ij A_ij B_ij
inline double ddot(const Mat3& a, const Mat3& b) {
  double s = 0;
  for (std::size_t i = 0; i < 9; ++i) s += a.m[i] * b.m[i];
  return s;
}

// Solves A x = b by Gaussian elimination with partial pivoting. Throws on a
// numerically singular pivot; callers that need a domain-specific error catch
// and rethrow.
inline Vec3 solve3(Mat3 a, Vec3 b) {
  int perm[3] = {0, 1, 2};
  double rhs[3] = {b.x, b.y, b.z};
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
    if (piv != col) {
      for (int c = 0; c < 3; ++c) std::swap(a(col, c), a(piv, c));
      std::swap(rhs[col], rhs[piv]);
      std::swap(perm[col], perm[piv]);
    }
    const double p = a(col, col);
    if (std::abs(p) < 1e-300) throw std::domain_error("solve3: singular matrix");
    for (int r = col + 1; r < 3; ++r) {
      const double f = a(r, col) / p;
      if (f == 0.0) continue;
      for (int c = col; c < 3; ++c) a(r, c) -= f * a(col, c);
      rhs[r] -= f * rhs[col];
    }
  }
  Vec3 x;
  for (int r = 2; r >= 0; --r) {
    double s = rhs[r];
    for (int c = r + 1; c < 3; ++c) s -= a(r, c) * x[c];
    x[r] = s / a(r, r);
  }
  return x;
}

// Solves A X = B column by column.
inline Mat3 solve3_matrix(const Mat3& a, const Mat3& b) {
  Mat3 x;
  for (std::size_t j = 0; j < 3; ++j) {
    Vec3 col = solve3(a, {b(0, j), b(1, j), b(2, j)});
    x(0, j) = col.x;
    x(1, j) = col.y;
    x(2, j) = col.z;
  }
  return x;
}

// A point of the one-particle phase space R^3_x x R^3_w.
struct PhasePoint {
  Vec3 x;
  Vec3 w;
};

inline double phase_dist(const PhasePoint& a, const PhasePoint& b) {
  return std::sqrt(norm2(a.x - b.x) + norm2(a.w - b.w));
}

inline double phase_norm(const PhasePoint& a) { return std::sqrt(norm2(a.x) + norm2(a.w)); }

}  // namespace homokin
