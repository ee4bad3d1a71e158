#pragma once

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "pata/exterior.hpp"

namespace testutil {

inline std::vector<double> random_point(std::mt19937_64& rng, int dim, double lo = -1.0,
                                        double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> p(dim);
  for (auto& v : p) v = u(rng);
  return p;
}

inline std::vector<std::vector<double>> random_points(std::mt19937_64& rng, int count, int dim,
                                                      double lo = -1.0, double hi = 1.0) {
  std::vector<std::vector<double>> out;
  for (int i = 0; i < count; ++i) out.push_back(random_point(rng, dim, lo, hi));
  return out;
}

// Polynomial of total degree <= 3 in a few random coordinates.
inline pata::Expr random_poly(std::mt19937_64& rng, int dim) {
  std::uniform_int_distribution<int> coord(0, dim - 1);
  std::uniform_real_distribution<double> c(-1.0, 1.0);
  pata::Expr e(c(rng));
  for (int t = 0; t < 3; ++t) {
    pata::Expr mono(c(rng));
    const int deg = 1 + static_cast<int>(rng() % 3);
    for (int j = 0; j < deg; ++j) mono *= pata::Expr::symbol(coord(rng));
    e += mono;
  }
  return e;
}

inline pata::Form random_form(std::mt19937_64& rng, int dim, int degree, int terms = 4) {
  pata::Form f(dim, degree);
  std::uniform_int_distribution<int> coord(0, dim - 1);
  for (int t = 0; t < terms; ++t) {
    std::vector<int> idx;
    while (static_cast<int>(idx.size()) < degree) {
      const int c = coord(rng);
      if (std::find(idx.begin(), idx.end(), c) == idx.end()) idx.push_back(c);
    }
    f += pata::Form::basis(dim, idx, random_poly(rng, dim));
  }
  return f;
}

inline pata::Multivector random_vector_field(std::mt19937_64& rng, int dim, int terms = 3) {
  pata::Multivector v(dim, 1);
  std::uniform_int_distribution<int> coord(0, dim - 1);
  for (int t = 0; t < terms; ++t) v += pata::Multivector::basis(dim, {coord(rng)}, random_poly(rng, dim));
  return v;
}

// a(v_1..v_p) by an explicit permutation sum, independent of the library's
// shuffle-sign code.
inline double slot_eval(const std::map<pata::Mask, double, pata::MaskLess>& a,
                        const std::vector<std::vector<double>>& vs) {
  double total = 0.0;
  for (const auto& [m, c] : a) {
    std::vector<int> idx = pata::mask_indices(m);
    std::vector<int> perm(idx.size());
    std::iota(perm.begin(), perm.end(), 0);
    double det = 0.0;
    do {
      int inv = 0;
      for (std::size_t i = 0; i < perm.size(); ++i)
        for (std::size_t j = i + 1; j < perm.size(); ++j) inv += perm[i] > perm[j];
      double prod = inv % 2 ? -1.0 : 1.0;
      for (std::size_t i = 0; i < perm.size(); ++i) prod *= vs[i][idx[perm[i]]];
      det += prod;
    } while (std::next_permutation(perm.begin(), perm.end()));
    total += c * det;
  }
  return total;
}

inline std::vector<double> unit(int dim, int i) {
  std::vector<double> v(dim, 0.0);
  v[i] = 1.0;
  return v;
}

}  // namespace testutil
