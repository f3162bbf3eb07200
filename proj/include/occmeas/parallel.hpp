#pragma once

#include <cstddef>
#include <vector>

namespace occmeas::par {

/// Runtime switch between the OpenMP kernels and the serial reference path.
/// Both paths produce byte-identical results: work items write to their own
/// slots and floating-point reductions are merged in a fixed block order that
/// does not depend on the thread count.
void set_serial_reference(bool on);
bool serial_reference();

void set_max_threads(int n);  // 0 keeps the OpenMP default
int max_threads();

namespace detail {
void run_indexed(std::size_t n, void* ctx, void (*body)(void*, std::size_t));
}

template <class F>
void parallel_for(std::size_t n, F&& body) {
  detail::run_indexed(n, &body, [](void* ctx, std::size_t i) {
    (*static_cast<F*>(ctx))(i);
  });
}

inline constexpr std::size_t kReduceBlock = 32;

/// Deterministic blocked reduction: items are grouped into fixed-size blocks,
/// each block is accumulated serially in index order (possibly on different
/// threads), and the block results are merged in block order on the caller's
/// thread. The result is identical in serial and parallel runs.
template <class Acc, class MakeAcc, class Body, class Merge>
Acc blocked_reduce(std::size_t n, MakeAcc make, Body body, Merge merge,
                   std::size_t block = kReduceBlock) {
  if (block == 0) block = 1;
  const std::size_t nblocks = (n + block - 1) / block;
  std::vector<Acc> partials;
  partials.reserve(nblocks);
  for (std::size_t b = 0; b < nblocks; ++b) partials.push_back(make());
  parallel_for(nblocks, [&](std::size_t b) {
    const std::size_t lo = b * block;
    const std::size_t hi = lo + block < n ? lo + block : n;
    for (std::size_t i = lo; i < hi; ++i) body(partials[b], i);
  });
  Acc total = make();
  for (std::size_t b = 0; b < nblocks; ++b) merge(total, partials[b]);
  return total;
}

}  // namespace occmeas::par
