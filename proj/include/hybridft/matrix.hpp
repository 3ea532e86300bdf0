#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "hybridft/error.hpp"
#include "hybridft/rng.hpp"

namespace hybridft::num {

template <typename T>
struct scalar_traits {
    static constexpr bool is_complex = false;
    static double abs2(T x) { return static_cast<double>(x) * static_cast<double>(x); }
    static T conj(T x) { return x; }
    static bool finite(T x) { return std::isfinite(x); }
};

template <typename R>
struct scalar_traits<std::complex<R>> {
    static constexpr bool is_complex = true;
    static double abs2(std::complex<R> x) { return std::norm(x); }
    static std::complex<R> conj(std::complex<R> x) { return std::conj(x); }
    static bool finite(std::complex<R> x) {
        return std::isfinite(x.real()) && std::isfinite(x.imag());
    }
};

// Dense row-major matrix over double or complex<double>.  The carrier type
// for weights, adapter factors, gradients, and unitary operators.
template <typename T>
class Mat {
  public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, T{}) {}
    Mat(std::size_t rows, std::size_t cols, std::vector<T> entries)
        : rows_(rows), cols_(cols), data_(std::move(entries)) {
        if (data_.size() != rows_ * cols_)
            throw shape_error("matrix: entry count does not match rows*cols");
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    static Mat zero(std::size_t rows, std::size_t cols) { return Mat(rows, cols); }

    static Mat identity(std::size_t n) {
        Mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
        return m;
    }

    bool same_shape(const Mat& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    Mat& operator+=(const Mat& o) {
        require_same_shape(o, "operator+=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    Mat& operator-=(const Mat& o) {
        require_same_shape(o, "operator-=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    Mat& operator*=(T s) {
        for (auto& x : data_) x *= s;
        return *this;
    }

    friend Mat operator+(Mat a, const Mat& b) { return a += b; }
    friend Mat operator-(Mat a, const Mat& b) { return a -= b; }
    friend Mat operator*(Mat a, T s) { return a *= s; }
    friend Mat operator*(T s, Mat a) { return a *= s; }

    friend Mat operator*(const Mat& a, const Mat& b) {
        if (a.cols_ != b.rows_)
            throw shape_error("matmul: inner dimensions disagree (" + std::to_string(a.cols_) +
                              " vs " + std::to_string(b.rows_) + ")");
        Mat c(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i) {
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const T aik = a(i, k);
                if (aik == T{}) continue;
                const T* brow = &b.data_[k * b.cols_];
                T* crow = &c.data_[i * b.cols_];
                for (std::size_t j = 0; j < b.cols_; ++j) crow[j] += aik * brow[j];
            }
        }
        return c;
    }

    friend std::vector<T> operator*(const Mat& a, const std::vector<T>& x) {
        if (a.cols_ != x.size()) throw shape_error("matvec: dimension mismatch");
        std::vector<T> y(a.rows_, T{});
        for (std::size_t i = 0; i < a.rows_; ++i) {
            T acc{};
            const T* row = &a.data_[i * a.cols_];
            for (std::size_t j = 0; j < a.cols_; ++j) acc += row[j] * x[j];
            y[i] = acc;
        }
        return y;
    }

    void require_same_shape(const Mat& o, const char* op) const {
        if (!same_shape(o)) throw shape_error(std::string(op) + ": shape mismatch");
    }

  private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<T> data_;
};

using Matrix = Mat<double>;
using CMatrix = Mat<std::complex<double>>;
using cvector = std::vector<std::complex<double>>;

template <typename T>
Mat<T> transpose(const Mat<T>& m) {
    Mat<T> t(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
    return t;
}

template <typename T>
Mat<T> adjoint(const Mat<T>& m) {
    Mat<T> t(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            t(j, i) = scalar_traits<T>::conj(m(i, j));
    return t;
}

template <typename T>
double frobenius_norm(const Mat<T>& m) {
    double s = 0.0;
    for (const auto& x : m.data()) s += scalar_traits<T>::abs2(x);
    return std::sqrt(s);
}

// max absolute column sum
template <typename T>
double one_norm(const Mat<T>& m) {
    double best = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < m.rows(); ++i) s += std::sqrt(scalar_traits<T>::abs2(m(i, j)));
        best = std::max(best, s);
    }
    return best;
}

template <typename T>
bool all_finite(const Mat<T>& m) {
    for (const auto& x : m.data())
        if (!scalar_traits<T>::finite(x)) return false;
    return true;
}

template <typename T>
bool is_square(const Mat<T>& m) {
    return m.rows() == m.cols();
}

// ||M^H M - I||_F, the manifold-membership drift used by every orthogonality check
template <typename T>
double orthogonality_drift(const Mat<T>& m) {
    Mat<T> g = adjoint(m) * m;
    for (std::size_t i = 0; i < g.cols(); ++i) g(i, i) -= T{1};
    return frobenius_norm(g);
}

template <typename T>
Mat<T> random_gaussian(std::size_t rows, std::size_t cols, Rng& rng, double stddev = 1.0) {
    Mat<T> m(rows, cols);
    for (auto& x : m.data()) {
        if constexpr (scalar_traits<T>::is_complex) {
            const double re = rng.gaussian(stddev);
            const double im = rng.gaussian(stddev);
            x = T(re, im);
        } else {
            x = rng.gaussian(stddev);
        }
    }
    return m;
}

// Solve A X = B by LU with partial pivoting.  A square.
template <typename T>
Mat<T> solve(Mat<T> a, Mat<T> b) {
    if (!is_square(a)) throw shape_error("solve: coefficient matrix must be square");
    if (a.rows() != b.rows()) throw shape_error("solve: rhs row count mismatch");
    const std::size_t n = a.rows();
    const std::size_t m = b.cols();
    std::vector<std::size_t> piv(n);
    for (std::size_t i = 0; i < n; ++i) piv[i] = i;

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        double best = std::sqrt(scalar_traits<T>::abs2(a(k, k)));
        for (std::size_t i = k + 1; i < n; ++i) {
            const double v = std::sqrt(scalar_traits<T>::abs2(a(i, k)));
            if (v > best) {
                best = v;
                p = i;
            }
        }
        if (best < 1e-300) throw singularity_error("solve: matrix is singular");
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
            for (std::size_t j = 0; j < m; ++j) std::swap(b(k, j), b(p, j));
        }
        const T pivot = a(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            const T f = a(i, k) / pivot;
            if (f == T{}) continue;
            a(i, k) = f;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
            for (std::size_t j = 0; j < m; ++j) b(i, j) -= f * b(k, j);
        }
    }
    // back substitution
    for (std::size_t ki = n; ki-- > 0;) {
        const T pivot = a(ki, ki);
        for (std::size_t j = 0; j < m; ++j) {
            T acc = b(ki, j);
            for (std::size_t l = ki + 1; l < n; ++l) acc -= a(ki, l) * b(l, j);
            b(ki, j) = acc / pivot;
        }
    }
    return b;
}

inline double det2x2(const Matrix& m) {
    return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
}

// determinant via LU; used only for small manifold sanity checks
template <typename T>
T determinant(Mat<T> a) {
    if (!is_square(a)) throw shape_error("determinant: matrix must be square");
    const std::size_t n = a.rows();
    T det{1};
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        double best = std::sqrt(scalar_traits<T>::abs2(a(k, k)));
        for (std::size_t i = k + 1; i < n; ++i) {
            const double v = std::sqrt(scalar_traits<T>::abs2(a(i, k)));
            if (v > best) {
                best = v;
                p = i;
            }
        }
        if (best == 0.0) return T{};
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
            det = -det;
        }
        det *= a(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            const T f = a(i, k) / a(k, k);
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
        }
    }
    return det;
}

inline double norm2(const cvector& v) {
    double s = 0.0;
    for (const auto& x : v) s += std::norm(x);
    return std::sqrt(s);
}

inline double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace hybridft::num
