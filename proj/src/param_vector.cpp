#include "gradfield/param_vector.hpp"

#include <stdexcept>

#include "gradfield/errors.hpp"

namespace gradfield::ad {

int ParamLayout::add_block(std::string name, int rows, int cols) {
  if (rows < 0 || cols < 0) {
    throw DimensionError("parameter block '" + name + "' has negative shape");
  }
  blocks_.push_back({std::move(name), rows, cols, size_});
  size_ += static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  return static_cast<int>(blocks_.size()) - 1;
}

const ParamBlock& ParamLayout::block(int b) const {
  if (b < 0 || b >= num_blocks()) {
    throw std::out_of_range("parameter block " + std::to_string(b) + " out of range");
  }
  return blocks_[b];
}

std::size_t ParamLayout::index(int b, int row, int col) const {
  const ParamBlock& blk = block(b);
  if (row < 0 || row >= blk.rows || col < 0 || col >= blk.cols) {
    throw std::out_of_range("index (" + std::to_string(row) + ", " + std::to_string(col) +
                            ") outside block '" + blk.name + "'");
  }
  return blk.offset + static_cast<std::size_t>(row) * blk.cols + col;
}

bool ParamLayout::operator==(const ParamLayout& other) const {
  if (size_ != other.size_ || blocks_.size() != other.blocks_.size()) return false;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const auto& a = blocks_[i];
    const auto& b = other.blocks_[i];
    if (a.name != b.name || a.rows != b.rows || a.cols != b.cols || a.offset != b.offset) {
      return false;
    }
  }
  return true;
}

ParamVector::ParamVector(ParamLayout layout)
    : layout_(std::move(layout)), values_(layout_.size(), 0.0) {}

ParamVector::ParamVector(ParamLayout layout, std::vector<double> values)
    : layout_(std::move(layout)), values_(std::move(values)) {
  if (values_.size() != layout_.size()) {
    throw DimensionError("parameter vector has " + std::to_string(values_.size()) +
                         " values, layout expects " + std::to_string(layout_.size()));
  }
}

ParamVector ParamVector::from_blocks(ParamLayout layout, const std::vector<Matrix>& blocks) {
  if (static_cast<int>(blocks.size()) != layout.num_blocks()) {
    throw DimensionError("expected " + std::to_string(layout.num_blocks()) + " blocks, got " +
                         std::to_string(blocks.size()));
  }
  ParamVector p(std::move(layout));
  for (int b = 0; b < p.layout_.num_blocks(); ++b) {
    const ParamBlock& blk = p.layout_.block(b);
    if (blocks[b].rows() != blk.rows || blocks[b].cols() != blk.cols) {
      throw DimensionError("block '" + blk.name + "' expects " + std::to_string(blk.rows) + "x" +
                           std::to_string(blk.cols) + ", got " +
                           std::to_string(blocks[b].rows()) + "x" +
                           std::to_string(blocks[b].cols()));
    }
    p.block(b) = blocks[b];
  }
  return p;
}

Eigen::Map<const RowMajorMatrix> ParamVector::block(int b) const {
  const ParamBlock& blk = layout_.block(b);
  return {values_.data() + blk.offset, blk.rows, blk.cols};
}

Eigen::Map<RowMajorMatrix> ParamVector::block(int b) {
  const ParamBlock& blk = layout_.block(b);
  return {values_.data() + blk.offset, blk.rows, blk.cols};
}

std::vector<Matrix> ParamVector::to_blocks() const {
  std::vector<Matrix> out;
  out.reserve(layout_.num_blocks());
  for (int b = 0; b < layout_.num_blocks(); ++b) out.emplace_back(block(b));
  return out;
}

}  // namespace gradfield::ad
