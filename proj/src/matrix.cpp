#include "setfunc/matrix.hpp"

#include <cmath>
#include <string>

#include "setfunc/errors.hpp"

namespace setfunc {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    Matrix m(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
        if (row.size() != c) throw ShapeError("from_rows: ragged initializer");
        std::size_t j = 0;
        for (double v : row) m(i, j++) = v;
        ++i;
    }
    return m;
}

bool Matrix::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

Matrix Matrix::slice_rows(std::size_t row_begin, std::size_t row_end) const {
    Matrix out(row_end - row_begin, cols_);
    std::copy(data_.begin() + static_cast<std::ptrdiff_t>(row_begin * cols_),
              data_.begin() + static_cast<std::ptrdiff_t>(row_end * cols_), out.data_.begin());
    return out;
}

std::string shape_str(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace setfunc
