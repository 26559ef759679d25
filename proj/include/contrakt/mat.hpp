#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace contrakt {

using Vec = std::vector<double>;

/// Dense row-major matrix of doubles. Everything in this library is small
/// (states n <= 4, layer widths <= 64), so no attempt is made at blocking
/// or expression templates.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}
    Mat(std::initializer_list<std::initializer_list<double>> init) {
        rows = init.size();
        cols = rows ? init.begin()->size() : 0;
        a.reserve(rows * cols);
        for (const auto& row : init) {
            if (row.size() != cols) throw std::invalid_argument("Mat: ragged initializer");
            a.insert(a.end(), row.begin(), row.end());
        }
    }

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

    [[nodiscard]] bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

    static Mat identity(std::size_t n) {
        Mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
    static Mat zeros(std::size_t r, std::size_t c) { return Mat(r, c); }

    static Mat col_vec(const Vec& v) {
        Mat m(v.size(), 1);
        m.a = v;
        return m;
    }

    Mat& operator+=(const Mat& o) {
        require_same_shape(o, "operator+=");
        for (std::size_t i = 0; i < a.size(); ++i) a[i] += o.a[i];
        return *this;
    }
    Mat& operator-=(const Mat& o) {
        require_same_shape(o, "operator-=");
        for (std::size_t i = 0; i < a.size(); ++i) a[i] -= o.a[i];
        return *this;
    }
    Mat& operator*=(double s) {
        for (double& x : a) x *= s;
        return *this;
    }

    void require_same_shape(const Mat& o, const char* where) const {
        if (!same_shape(o)) throw std::invalid_argument(std::string(where) + ": shape mismatch");
    }
};

inline Mat operator+(Mat lhs, const Mat& rhs) { return lhs += rhs; }
inline Mat operator-(Mat lhs, const Mat& rhs) { return lhs -= rhs; }
inline Mat operator*(Mat m, double s) { return m *= s; }
inline Mat operator*(double s, Mat m) { return m *= s; }

inline Mat operator*(const Mat& A, const Mat& B) {
    if (A.cols != B.rows) throw std::invalid_argument("matmul: inner dimension mismatch");
    Mat C(A.rows, B.cols);
    for (std::size_t i = 0; i < A.rows; ++i)
        for (std::size_t k = 0; k < A.cols; ++k) {
            const double aik = A(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < B.cols; ++j) C(i, j) += aik * B(k, j);
        }
    return C;
}

inline Vec operator*(const Mat& A, const Vec& x) {
    if (A.cols != x.size()) throw std::invalid_argument("matvec: dimension mismatch");
    Vec y(A.rows, 0.0);
    for (std::size_t i = 0; i < A.rows; ++i)
        for (std::size_t j = 0; j < A.cols; ++j) y[i] += A(i, j) * x[j];
    return y;
}

inline Mat transpose(const Mat& A) {
    Mat T(A.cols, A.rows);
    for (std::size_t i = 0; i < A.rows; ++i)
        for (std::size_t j = 0; j < A.cols; ++j) T(j, i) = A(i, j);
    return T;
}

/// Sym[A] = A + A^T.
inline Mat sym(const Mat& A) {
    if (A.rows != A.cols) throw std::invalid_argument("sym: matrix not square");
    return A + transpose(A);
}

inline double max_abs(const Mat& A) {
    double m = 0.0;
    for (double x : A.a) m = std::max(m, std::abs(x));
    return m;
}

inline double frobenius_norm(const Mat& A) {
    double s = 0.0;
    for (double x : A.a) s += x * x;
    return std::sqrt(s);
}

inline bool all_finite(const Mat& A) {
    return std::all_of(A.a.begin(), A.a.end(), [](double x) { return std::isfinite(x); });
}

// ---- small vector helpers ----

inline Vec operator+(Vec x, const Vec& y) {
    if (x.size() != y.size()) throw std::invalid_argument("vec+: size mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += y[i];
    return x;
}

inline Vec operator-(Vec x, const Vec& y) {
    if (x.size() != y.size()) throw std::invalid_argument("vec-: size mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= y[i];
    return x;
}

inline Vec operator*(double s, Vec x) {
    for (double& v : x) v *= s;
    return x;
}

inline double dot(const Vec& x, const Vec& y) {
    if (x.size() != y.size()) throw std::invalid_argument("dot: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline double norm2(const Vec& x) { return std::sqrt(dot(x, x)); }

inline bool all_finite(const Vec& x) {
    return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

/// Axis-aligned box in state space.
struct Box {
    Vec lo;
    Vec hi;

    [[nodiscard]] std::size_t dim() const { return lo.size(); }

    void validate() const {
        if (lo.size() != hi.size() || lo.empty())
            throw std::invalid_argument("Box: inconsistent bounds");
        for (std::size_t i = 0; i < lo.size(); ++i)
            if (!(lo[i] < hi[i]) || !std::isfinite(lo[i]) || !std::isfinite(hi[i]))
                throw std::invalid_argument("Box: empty or non-finite extent");
    }

    [[nodiscard]] bool contains(const Vec& x, double slack = 0.0) const {
        if (x.size() != lo.size()) return false;
        for (std::size_t i = 0; i < x.size(); ++i)
            if (x[i] < lo[i] - slack || x[i] > hi[i] + slack) return false;
        return true;
    }
};

} // namespace contrakt
