#pragma once

#include <numeric>

#include "nnr/designs.hpp"
#include "nnr/rng.hpp"

namespace nnr::test {

inline DenseMatrix orthonormal(std::size_t n, std::size_t p, std::uint64_t seed, bool rotate = true) {
  DesignSpec ds;
  ds.kind = DesignKind::orthonormal;
  ds.n = n;
  ds.p = p;
  ds.seed = seed;
  ds.rotate = rotate;
  return generate(ds);
}

inline DenseMatrix gaussian(std::size_t n, std::size_t p, std::uint64_t seed) {
  DesignSpec ds;
  ds.kind = DesignKind::gaussianIid;
  ds.n = n;
  ds.p = p;
  ds.seed = seed;
  return generate(ds);
}

inline DenseMatrix ens_plus(std::size_t n, std::size_t p, std::uint64_t seed, Ensemble e = Ensemble::E1,
                            double param = 1.0) {
  DesignSpec ds;
  ds.kind = DesignKind::ensPlus;
  ds.n = n;
  ds.p = p;
  ds.seed = seed;
  ds.ensemble = e;
  ds.param = param;
  return generate(ds);
}

inline IndexSet first(std::size_t s) {
  IndexSet S(s);
  std::iota(S.begin(), S.end(), std::size_t{0});
  return S;
}

inline Vector normals(std::size_t n, Rng& rng, double scale = 1.0) {
  Vector v(n);
  for (auto& x : v) x = scale * rng.normal();
  return v;
}

}  // namespace nnr::test
