#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gradfield::ad {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Named rectangular block inside a flat parameter array (row-major).
struct ParamBlock {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::size_t offset = 0;
};

/// Bijection between (block, row, col) and a flat index in [0, size()).
class ParamLayout {
 public:
  ParamLayout() = default;

  /// Appends a block and returns its index.
  int add_block(std::string name, int rows, int cols);

  std::size_t size() const { return size_; }
  int num_blocks() const { return static_cast<int>(blocks_.size()); }
  const ParamBlock& block(int b) const;
  const std::vector<ParamBlock>& blocks() const { return blocks_; }

  std::size_t index(int b, int row, int col) const;

  bool operator==(const ParamLayout& other) const;

 private:
  std::vector<ParamBlock> blocks_;
  std::size_t size_ = 0;
};

/// Flat parameter storage θ ∈ ℝᵖ with a structured view.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(ParamLayout layout);
  ParamVector(ParamLayout layout, std::vector<double> values);

  /// Packs matrices block by block; shapes must match the layout.
  static ParamVector from_blocks(ParamLayout layout, const std::vector<Matrix>& blocks);

  const ParamLayout& layout() const { return layout_; }
  std::size_t size() const { return values_.size(); }

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  double& at(int b, int row, int col) { return values_[layout_.index(b, row, col)]; }
  double at(int b, int row, int col) const { return values_[layout_.index(b, row, col)]; }

  Eigen::Map<const RowMajorMatrix> block(int b) const;
  Eigen::Map<RowMajorMatrix> block(int b);

  std::vector<Matrix> to_blocks() const;

 private:
  ParamLayout layout_;
  std::vector<double> values_;
};

}  // namespace gradfield::ad
