#pragma once

#include <algorithm>
#include <cstddef>
#include <memory>
#include <utility>
#include <vector>

#include "fewphoton/error.hpp"

namespace fewphoton {

/// Symmetric (Dicke) subspace of N two-level atoms, collective spin S = N/2.
/// The spin is kept as the integer 2S so sector labels stay exact; basis
/// index i = m + S runs over m = -S, ..., S in ascending order.
class DickeSpace {
 public:
  explicit DickeSpace(int num_atoms) : two_s_(num_atoms) {
    if (num_atoms < 1) throw Error(ErrorKind::Config, "num_atoms must be >= 1", "num_atoms");
  }

  int num_atoms() const noexcept { return two_s_; }
  int two_s() const noexcept { return two_s_; }
  double spin() const noexcept { return 0.5 * two_s_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(two_s_) + 1; }
  double m(std::size_t index) const noexcept { return static_cast<double>(index) - spin(); }

  friend bool operator==(const DickeSpace&, const DickeSpace&) = default;

 private:
  int two_s_;
};

/// Single-mode Fock space truncated at n_max photons.
class FockSpace {
 public:
  explicit FockSpace(int n_max) : n_max_(n_max) {
    if (n_max < 0) throw Error(ErrorKind::Config, "n_max must be >= 0", "n_max");
  }

  int n_max() const noexcept { return n_max_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(n_max_) + 1; }

  friend bool operator==(const FockSpace&, const FockSpace&) = default;

 private:
  int n_max_;
};

struct JointIndex {
  int i;  // Dicke index, m = i - S
  int n;  // photon number
  friend bool operator==(const JointIndex&, const JointIndex&) = default;
};

/// Eigenspace of the excitation number a^dag a + Sz + S with eigenvalue k.
/// Members are ordered by m ascending.
struct ExcitationSector {
  int k = 0;
  std::vector<JointIndex> members;
  std::size_t dim() const noexcept { return members.size(); }
};

/// Dicke x Fock product space. Joint index is m-major: i * (n_max + 1) + n.
class JointSpace {
 public:
  JointSpace(DickeSpace dicke, FockSpace fock) : dicke_(dicke), fock_(fock) {
    const int max_k = dicke_.two_s() + fock_.n_max();
    sectors_.reserve(static_cast<std::size_t>(max_k) + 1);
    for (int k = 0; k <= max_k; ++k) {
      ExcitationSector sector{k, {}};
      for (int i = lowest_i(k); i <= highest_i(k); ++i) sector.members.push_back({i, k - i});
      sectors_.push_back(std::move(sector));
    }
  }

  static std::shared_ptr<const JointSpace> make(int num_atoms, int n_max) {
    return std::make_shared<const JointSpace>(DickeSpace(num_atoms), FockSpace(n_max));
  }

  const DickeSpace& dicke() const noexcept { return dicke_; }
  const FockSpace& fock() const noexcept { return fock_; }
  const std::vector<ExcitationSector>& sectors() const noexcept { return sectors_; }
  std::size_t sector_count() const noexcept { return sectors_.size(); }
  const ExcitationSector& sector(int k) const { return sectors_.at(static_cast<std::size_t>(k)); }

  std::size_t dim() const noexcept { return dicke_.dim() * fock_.dim(); }

  std::size_t index(int i, int n) const noexcept {
    return static_cast<std::size_t>(i) * fock_.dim() + static_cast<std::size_t>(n);
  }
  JointIndex split(std::size_t index) const noexcept {
    return {static_cast<int>(index / fock_.dim()), static_cast<int>(index % fock_.dim())};
  }

  int sector_of(int i, int n) const noexcept { return i + n; }
  // Position of (i, n) inside its sector's member list.
  std::size_t position_in_sector(int i, int n) const noexcept {
    return static_cast<std::size_t>(i - lowest_i(i + n));
  }

  friend bool operator==(const JointSpace& a, const JointSpace& b) {
    return a.dicke_ == b.dicke_ && a.fock_ == b.fock_;
  }

 private:
  int lowest_i(int k) const noexcept { return std::max(0, k - fock_.n_max()); }
  int highest_i(int k) const noexcept { return std::min(dicke_.two_s(), k); }

  DickeSpace dicke_;
  FockSpace fock_;
  std::vector<ExcitationSector> sectors_;
};

using JointSpacePtr = std::shared_ptr<const JointSpace>;

}  // namespace fewphoton
