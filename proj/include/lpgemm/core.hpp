#pragma once

// Canonical and propagated matrix representations, tile parameters and the
// index arithmetic of the propagated packed layout.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace lpgemm {

/// Precondition on dimensions or arguments was violated.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A propagated buffer cannot be consumed with the requested tiling.
class LayoutError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kMaxRegisterTile = 32;

constexpr std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }
constexpr std::size_t round_up(std::size_t a, std::size_t b) { return ceil_div(a, b) * b; }

// ---------------------------------------------------------------------------
// TileParams

/// Cache (mc, nc, kc) and register (mr, nr) blocking.
struct TileParams {
  std::size_t mc = 448;
  std::size_t nc = 16384;
  std::size_t kc = 448;
  std::size_t mr = 16;
  std::size_t nr = 4;

  friend bool operator==(const TileParams&, const TileParams&) = default;

  [[nodiscard]] bool valid() const noexcept {
    return mc >= 1 && nc >= 1 && kc >= 1 && mr >= 1 && nr >= 1 && mc % mr == 0 &&
           nc % nr == 0 && mr <= kMaxRegisterTile && nr <= kMaxRegisterTile;
  }

  void validate() const {
    if (!valid()) {
      throw ContractError("invalid tile params: " + to_string());
    }
  }

  [[nodiscard]] std::string to_string() const {
    return "mc=" + std::to_string(mc) + " nc=" + std::to_string(nc) + " kc=" + std::to_string(kc) +
           " mr=" + std::to_string(mr) + " nr=" + std::to_string(nr);
  }

  /// Intel Xeon Gold 6252 (AVX-512) configuration.
  static constexpr TileParams x86_avx512() { return {448, 16384, 448, 16, 4}; }
  /// SpacemiT X60 (RVV 1.0) configuration. nc is 16384 so that nc mod nr = 0.
  static constexpr TileParams riscv_rvv() { return {128, 16384, 128, 16, 8}; }
};

/// True iff a propagated matrix produced with `producer` can be read as the
/// pre-packed multiplier of a kernel configured with `consumer`.
inline bool compatible(const TileParams& producer, const TileParams& consumer,
                       std::size_t /*rows*/ = 0, std::size_t /*cols*/ = 0) noexcept {
  return producer == consumer;
}

// ---------------------------------------------------------------------------
// MatrixView

/// Row-major window over a float buffer: element (i, j) lives at i * ld + j.
template <typename T>
class BasicMatrixView {
 public:
  using value_type = std::remove_const_t<T>;

  constexpr BasicMatrixView() = default;
  constexpr BasicMatrixView(T* data, std::size_t rows, std::size_t cols, std::size_t ld)
      : data_(data), rows_(rows), cols_(cols), ld_(ld) {
    if (ld_ < cols_) throw ContractError("leading dimension smaller than column count");
  }
  constexpr BasicMatrixView(T* data, std::size_t rows, std::size_t cols)
      : BasicMatrixView(data, rows, cols, cols) {}

  // MatrixView -> ConstMatrixView
  template <typename U>
    requires(std::is_const_v<T> && std::is_same_v<const U, T>)
  constexpr BasicMatrixView(const BasicMatrixView<U>& other)  // NOLINT(google-explicit-constructor)
      : data_(other.data()), rows_(other.rows()), cols_(other.cols()), ld_(other.ld()) {}

  constexpr T* data() const noexcept { return data_; }
  constexpr std::size_t rows() const noexcept { return rows_; }
  constexpr std::size_t cols() const noexcept { return cols_; }
  constexpr std::size_t ld() const noexcept { return ld_; }
  constexpr bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }

  constexpr T& operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * ld_ + j]; }
  constexpr T* row(std::size_t i) const noexcept { return data_ + i * ld_; }

  /// Zero-copy window of `rows` x `cols` starting at (r0, c0).
  constexpr BasicMatrixView sub(std::size_t r0, std::size_t c0, std::size_t rows,
                                std::size_t cols) const {
    if (r0 + rows > rows_ || c0 + cols > cols_) {
      throw std::out_of_range("sub-view exceeds parent view");
    }
    BasicMatrixView v;
    v.data_ = data_ + r0 * ld_ + c0;
    v.rows_ = rows;
    v.cols_ = cols;
    v.ld_ = ld_;
    return v;
  }

 private:
  T* data_ = nullptr;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t ld_ = 0;
};

using MatrixView = BasicMatrixView<float>;
using ConstMatrixView = BasicMatrixView<const float>;

/// Owning dense row-major matrix with ld == cols.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, float fill = 0.0f)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0f;
    return m;
  }

  static Matrix copy_of(ConstMatrixView v) {
    Matrix m(v.rows(), v.cols());
    for (std::size_t i = 0; i < v.rows(); ++i) {
      std::copy_n(v.row(i), v.cols(), m.view().row(i));
    }
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  float* data() noexcept { return data_.data(); }
  const float* data() const noexcept { return data_.data(); }
  std::span<float> flat() & noexcept { return data_; }
  std::span<const float> flat() const& noexcept { return data_; }
  void flat() && = delete;  // span would dangle

  float& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  float operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  MatrixView view() noexcept { return {data_.data(), rows_, cols_, std::max<std::size_t>(cols_, 1)}; }
  ConstMatrixView view() const noexcept { return cview(); }
  ConstMatrixView cview() const noexcept {
    return {data_.data(), rows_, cols_, std::max<std::size_t>(cols_, 1)};
  }
  operator MatrixView() noexcept { return view(); }         // NOLINT(google-explicit-constructor)
  operator ConstMatrixView() const noexcept { return cview(); }  // NOLINT(google-explicit-constructor)

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
};

inline Matrix transpose(ConstMatrixView v) {
  Matrix t(v.cols(), v.rows());
  for (std::size_t i = 0; i < v.rows(); ++i) {
    for (std::size_t j = 0; j < v.cols(); ++j) t(j, i) = v(i, j);
  }
  return t;
}

/// Max-norm relative error: max|x - ref| / max(max|ref|, abs_floor).
inline double max_relative_error(ConstMatrixView x, ConstMatrixView ref, double abs_floor = 1e-6) {
  if (x.rows() != ref.rows() || x.cols() != ref.cols()) {
    throw ContractError("max_relative_error: shape mismatch");
  }
  double diff = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      const double r = ref(i, j);
      const double d = std::abs(static_cast<double>(x(i, j)) - r);
      if (std::isnan(d)) return std::numeric_limits<double>::infinity();
      diff = std::max(diff, d);
      scale = std::max(scale, std::abs(r));
    }
  }
  return diff / std::max(scale, abs_floor);
}

inline bool bit_equal(ConstMatrixView a, ConstMatrixView b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    if (!std::equal(a.row(i), a.row(i) + a.cols(), b.row(i),
                    [](float x, float y) { return std::bit_cast<unsigned>(x) == std::bit_cast<unsigned>(y); })) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// StoreSpec

enum class StoreTarget { Canonical, Propagated };

/// Where output blocks land. Blocks are the (nc-block, mc-block) pairs of the
/// propagated layout; storage slot k holds logical block block_order[k], and
/// slot k starts at base_offset + k * (block_size + inter_block_stride).
struct StoreSpec {
  StoreTarget target = StoreTarget::Propagated;
  std::vector<std::size_t> block_order;  // empty = identity
  std::size_t inter_block_stride = 0;
  std::size_t base_offset = 0;

  bool identity_order() const noexcept { return block_order.empty(); }
};

// ---------------------------------------------------------------------------
// PropagatedLayout

/// Storage map of the propagated layout
///   (N/nc) (M/mc) (nc/nr) (mc/mr) nr mr
/// i.e. nc-blocks outermost, then mc-blocks, then nr-wide column groups, then
/// mr-tall row panels, then a contiguous micro-tile holding nr columns of mr
/// rows each (mr fastest).
///
/// Rows are padded to a multiple of mr when they fit in a single mc block and
/// to a multiple of mc otherwise, so every block has the same shape; columns
/// follow the same rule with nr/nc. Padding storage is zero.
class PropagatedLayout {
 public:
  PropagatedLayout() = default;

  PropagatedLayout(std::size_t rows, std::size_t cols, const TileParams& params,
                   const StoreSpec& store = {})
      : rows_(rows), cols_(cols), params_(params) {
    params.validate();
    if (rows == 0 || cols == 0) throw ContractError("propagated matrix must be non-empty");
    if (store.target != StoreTarget::Propagated) {
      throw ContractError("propagated layout requires a Propagated store target");
    }
    padded_rows_ = rows <= params.mc ? round_up(rows, params.mr) : round_up(rows, params.mc);
    padded_cols_ = cols <= params.nc ? round_up(cols, params.nr) : round_up(cols, params.nc);
    block_rows_ = std::min(params.mc, padded_rows_);
    block_cols_ = std::min(params.nc, padded_cols_);
    row_blocks_ = padded_rows_ / block_rows_;
    col_blocks_ = padded_cols_ / block_cols_;
    stride_ = store.inter_block_stride;
    base_ = store.base_offset;
    if (!store.block_order.empty()) {
      const std::size_t n = block_count();
      if (store.block_order.size() != n) {
        throw ContractError("block_order must list every block exactly once");
      }
      slot_of_block_.assign(n, n);
      for (std::size_t slot = 0; slot < n; ++slot) {
        const std::size_t b = store.block_order[slot];
        if (b >= n || slot_of_block_[b] != n) {
          throw ContractError("block_order is not a permutation");
        }
        slot_of_block_[b] = slot;
      }
      block_order_ = store.block_order;
    }
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  const TileParams& params() const noexcept { return params_; }
  std::size_t padded_rows() const noexcept { return padded_rows_; }
  std::size_t padded_cols() const noexcept { return padded_cols_; }
  std::size_t block_rows() const noexcept { return block_rows_; }
  std::size_t block_cols() const noexcept { return block_cols_; }
  std::size_t row_blocks() const noexcept { return row_blocks_; }
  std::size_t col_blocks() const noexcept { return col_blocks_; }
  std::size_t block_count() const noexcept { return row_blocks_ * col_blocks_; }
  std::size_t block_size() const noexcept { return block_rows_ * block_cols_; }
  std::size_t tile_size() const noexcept { return params_.mr * params_.nr; }
  std::size_t inter_block_stride() const noexcept { return stride_; }
  std::size_t base_offset() const noexcept { return base_; }
  bool identity_order() const noexcept { return block_order_.empty(); }
  bool dense() const noexcept { return identity_order() && stride_ == 0 && base_ == 0; }
  const std::vector<std::size_t>& block_order() const noexcept { return block_order_; }

  /// Logical block index: nc-blocks outermost.
  std::size_t block_id(std::size_t col_block, std::size_t row_block) const noexcept {
    return col_block * row_blocks_ + row_block;
  }

  std::size_t slot_of(std::size_t block) const noexcept {
    return block_order_.empty() ? block : slot_of_block_[block];
  }

  std::size_t block_start(std::size_t col_block, std::size_t row_block) const noexcept {
    return base_ + slot_of(block_id(col_block, row_block)) * (block_size() + stride_);
  }

  /// Offset of the micro-tile whose top-left logical element is (i, j);
  /// i must be a multiple of mr and j a multiple of nr.
  std::size_t tile_offset(std::size_t i, std::size_t j) const noexcept {
    const std::size_t ib = i / block_rows_;
    const std::size_t jb = j / block_cols_;
    const std::size_t ii = i - ib * block_rows_;
    const std::size_t jj = j - jb * block_cols_;
    return block_start(jb, ib) + (jj / params_.nr) * (block_rows_ * params_.nr) +
           (ii / params_.mr) * tile_size();
  }

  std::size_t offset_unchecked(std::size_t i, std::size_t j) const noexcept {
    const std::size_t ti = i - i % params_.mr;
    const std::size_t tj = j - j % params_.nr;
    return tile_offset(ti, tj) + (j - tj) * params_.mr + (i - ti);
  }

  std::size_t offset(std::size_t i, std::size_t j) const {
    if (i >= rows_ || j >= cols_) {
      throw std::out_of_range("propagated index (" + std::to_string(i) + ", " + std::to_string(j) +
                              ") outside " + std::to_string(rows_) + "x" + std::to_string(cols_));
    }
    return offset_unchecked(i, j);
  }

  /// Elements spanned by the layout, including inter-block gaps (not trailing).
  std::size_t storage_size() const noexcept {
    return base_ + block_count() * block_size() + (block_count() - 1) * stride_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  TileParams params_{};
  std::size_t padded_rows_ = 0;
  std::size_t padded_cols_ = 0;
  std::size_t block_rows_ = 0;
  std::size_t block_cols_ = 0;
  std::size_t row_blocks_ = 0;
  std::size_t col_blocks_ = 0;
  std::size_t stride_ = 0;
  std::size_t base_ = 0;
  std::vector<std::size_t> block_order_;
  std::vector<std::size_t> slot_of_block_;
};

/// Storage offset of logical (i, j) in the dense propagated layout of a
/// rows x cols matrix. Throws std::out_of_range outside the padded extent.
inline std::size_t propagated_offset(std::size_t i, std::size_t j, std::size_t rows,
                                     std::size_t cols, const TileParams& params) {
  return PropagatedLayout(rows, cols, params).offset(i, j);
}

// ---------------------------------------------------------------------------
// Propagated views and matrix

template <typename T>
class BasicPropagatedView {
 public:
  BasicPropagatedView() = default;
  BasicPropagatedView(PropagatedLayout layout, std::span<T> storage)
      : layout_(std::move(layout)), storage_(storage) {
    if (storage_.size() < layout_.storage_size()) {
      throw ContractError("storage too small for propagated layout");
    }
  }

  template <typename U>
    requires(std::is_const_v<T> && std::is_same_v<const U, T>)
  BasicPropagatedView(const BasicPropagatedView<U>& other)  // NOLINT(google-explicit-constructor)
      : layout_(other.layout()), storage_(other.storage()) {}

  const PropagatedLayout& layout() const noexcept { return layout_; }
  std::span<T> storage() const noexcept { return storage_; }
  T* data() const noexcept { return storage_.data(); }
  std::size_t rows() const noexcept { return layout_.rows(); }
  std::size_t cols() const noexcept { return layout_.cols(); }
  const TileParams& params() const noexcept { return layout_.params(); }

  T& at(std::size_t i, std::size_t j) const { return storage_[layout_.offset(i, j)]; }
  T* tile(std::size_t i, std::size_t j) const noexcept { return storage_.data() + layout_.tile_offset(i, j); }

 private:
  PropagatedLayout layout_;
  std::span<T> storage_;
};

using PropagatedView = BasicPropagatedView<float>;
using ConstPropagatedView = BasicPropagatedView<const float>;

/// Owning matrix stored in the propagated layout.
class PropagatedMatrix {
 public:
  PropagatedMatrix() = default;
  explicit PropagatedMatrix(PropagatedLayout layout)
      : layout_(std::move(layout)), data_(layout_.storage_size(), 0.0f) {}
  PropagatedMatrix(std::size_t rows, std::size_t cols, const TileParams& params,
                   const StoreSpec& store = {})
      : PropagatedMatrix(PropagatedLayout(rows, cols, params, store)) {}

  const PropagatedLayout& layout() const noexcept { return layout_; }
  std::size_t rows() const noexcept { return layout_.rows(); }
  std::size_t cols() const noexcept { return layout_.cols(); }
  std::size_t padded_rows() const noexcept { return layout_.padded_rows(); }
  std::size_t padded_cols() const noexcept { return layout_.padded_cols(); }
  const TileParams& params() const noexcept { return layout_.params(); }
  std::span<float> storage() noexcept { return data_; }
  std::span<const float> storage() const noexcept { return data_; }

  float& at(std::size_t i, std::size_t j) { return data_[layout_.offset(i, j)]; }
  float at(std::size_t i, std::size_t j) const { return data_[layout_.offset(i, j)]; }

  PropagatedView view() { return {layout_, data_}; }
  ConstPropagatedView view() const { return cview(); }
  ConstPropagatedView cview() const { return {layout_, std::span<const float>(data_)}; }
  operator PropagatedView() { return view(); }               // NOLINT(google-explicit-constructor)
  operator ConstPropagatedView() const { return cview(); }   // NOLINT(google-explicit-constructor)

 private:
  PropagatedLayout layout_;
  std::vector<float> data_;
};

/// StoreSpec that places a rows x width matrix into columns [col0, col0 + width)
/// of a matrix with layout `parent`. The slice must be nr-aligned and must not
/// straddle an nc block of the parent.
inline StoreSpec column_slice_store(const PropagatedLayout& parent, std::size_t col0, std::size_t width) {
  const TileParams& p = parent.params();
  if (!parent.identity_order()) throw LayoutError("column slice requires identity block order");
  if (width == 0 || col0 + width > parent.cols()) throw ContractError("column slice out of range");
  if (col0 % p.nr != 0 || width % p.nr != 0) {
    throw LayoutError("column slice [" + std::to_string(col0) + ", " + std::to_string(col0 + width) +
                      ") is not aligned to nr=" + std::to_string(p.nr));
  }
  const std::size_t jb = col0 / parent.block_cols();
  if ((col0 + width - 1) / parent.block_cols() != jb || width > p.nc) {
    throw LayoutError("column slice straddles an nc block");
  }
  StoreSpec s;
  s.base_offset = parent.block_start(jb, 0) + (col0 - jb * parent.block_cols()) * parent.block_rows();
  s.inter_block_stride = parent.block_size() + parent.inter_block_stride() - width * parent.block_rows();
  return s;
}

template <typename T>
BasicPropagatedView<T> column_slice(const BasicPropagatedView<T>& parent, std::size_t col0,
                                    std::size_t width) {
  PropagatedLayout sub(parent.rows(), width, parent.params(),
                       column_slice_store(parent.layout(), col0, width));
  return {std::move(sub), parent.storage()};
}

}  // namespace lpgemm
