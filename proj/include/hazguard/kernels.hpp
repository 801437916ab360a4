#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hazguard/detection_metrics.hpp"

namespace hazguard {

// Row maxima of the dot-product matrix between two row-major matrices whose
// rows are unit vectors: out[i] = max_j dot(a[i], b[j]). Rows of b must be
// non-empty. The parallel variant splits rows across OpenMP threads and is
// bitwise identical to the serial one.
std::vector<double> max_similarity_serial(std::span<const double> a, std::size_t na,
                                          std::span<const double> b, std::size_t nb,
                                          std::size_t dim);
std::vector<double> max_similarity_parallel(std::span<const double> a, std::size_t na,
                                            std::span<const double> b, std::size_t nb,
                                            std::size_t dim);
// Dispatches to the parallel variant when na * nb * dim is large enough to
// amortize thread startup.
std::vector<double> max_similarity(std::span<const double> a, std::size_t na,
                                   std::span<const double> b, std::size_t nb, std::size_t dim);

// Per-image greedy matching over a batch; results are index-aligned with the
// input. The parallel variant distributes images across OpenMP threads.
std::vector<MatchResult> match_images_serial(std::span<const ImageDetections> images,
                                             double alpha);
std::vector<MatchResult> match_images_parallel(std::span<const ImageDetections> images,
                                               double alpha);

}  // namespace hazguard
