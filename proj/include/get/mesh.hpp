#pragma once

#include "get/common.hpp"

namespace get {

/// Regular grid of Q4 (2D) / Hex8 (3D) elements with uniform edge length h.
/// Node and element indices run x-fastest. Connectivity is computed from
/// index arithmetic rather than stored.
template <int D>
struct StructuredMesh {
  std::array<int, D> cells{};  // element counts per axis
  Vec<D> origin = Vec<D>::Zero();
  double h = 0.0;  // uniform element edge length

  StructuredMesh() = default;
  StructuredMesh(const std::array<int, D>& cells_, double h_, Vec<D> origin_ = Vec<D>::Zero())
      : cells(cells_), origin(origin_), h(h_) {
    if (!(h > 0.0)) throw DefinitionError("element edge length must be positive");
    for (int k = 0; k < D; ++k) {
      if (cells[k] < 1) throw DefinitionError("mesh needs at least one element per axis");
    }
  }

  int num_elements() const {
    int n = 1;
    for (int k = 0; k < D; ++k) n *= cells[k];
    return n;
  }
  std::array<int, D> node_dims() const {
    std::array<int, D> nd{};
    for (int k = 0; k < D; ++k) nd[k] = cells[k] + 1;
    return nd;
  }
  int num_nodes() const {
    int n = 1;
    for (int k = 0; k < D; ++k) n *= cells[k] + 1;
    return n;
  }
  int num_dofs() const { return D * num_nodes(); }
  double element_volume() const { return D == 2 ? h * h : h * h * h; }
  Vec<D> extent() const {
    Vec<D> e;
    for (int k = 0; k < D; ++k) e[k] = cells[k] * h;
    return e;
  }

  int node_id(const std::array<int, D>& idx) const {
    if constexpr (D == 2) {
      return idx[0] + (cells[0] + 1) * idx[1];
    } else {
      return idx[0] + (cells[0] + 1) * (idx[1] + (cells[1] + 1) * idx[2]);
    }
  }
  std::array<int, D> node_index(int node) const {
    std::array<int, D> idx{};
    const int nx = cells[0] + 1;
    if constexpr (D == 2) {
      idx[0] = node % nx;
      idx[1] = node / nx;
    } else {
      const int ny = cells[1] + 1;
      idx[0] = node % nx;
      idx[1] = (node / nx) % ny;
      idx[2] = node / (nx * ny);
    }
    return idx;
  }
  Vec<D> node_pos(int node) const {
    const auto idx = node_index(node);
    Vec<D> p;
    for (int k = 0; k < D; ++k) p[k] = origin[k] + h * idx[k];
    return p;
  }

  int element_id(const std::array<int, D>& idx) const {
    if constexpr (D == 2) {
      return idx[0] + cells[0] * idx[1];
    } else {
      return idx[0] + cells[0] * (idx[1] + cells[1] * idx[2]);
    }
  }
  std::array<int, D> element_index(int elem) const {
    std::array<int, D> idx{};
    if constexpr (D == 2) {
      idx[0] = elem % cells[0];
      idx[1] = elem / cells[0];
    } else {
      idx[0] = elem % cells[0];
      idx[1] = (elem / cells[0]) % cells[1];
      idx[2] = elem / (cells[0] * cells[1]);
    }
    return idx;
  }
  Vec<D> element_center(int elem) const {
    const auto idx = element_index(elem);
    Vec<D> p;
    for (int k = 0; k < D; ++k) p[k] = origin[k] + h * (idx[k] + 0.5);
    return p;
  }

  /// Element nodes in the standard isoparametric order: Q4 counterclockwise,
  /// Hex8 bottom face then top face.
  std::array<int, kNodesPerElement<D>> element_nodes(int elem) const {
    const auto e = element_index(elem);
    if constexpr (D == 2) {
      const int nx = cells[0] + 1;
      const int n0 = e[0] + nx * e[1];
      return {n0, n0 + 1, n0 + 1 + nx, n0 + nx};
    } else {
      const int nx = cells[0] + 1;
      const int nxy = nx * (cells[1] + 1);
      const int n0 = e[0] + nx * e[1] + nxy * e[2];
      return {n0,       n0 + 1,       n0 + 1 + nx,       n0 + nx,
              n0 + nxy, n0 + 1 + nxy, n0 + 1 + nx + nxy, n0 + nx + nxy};
    }
  }
};

}  // namespace get
