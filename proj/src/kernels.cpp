#include "hazguard/kernels.hpp"

#include <algorithm>

#include "hazguard/errors.hpp"

namespace hazguard {

namespace {

// Below this many multiply-adds the OpenMP fork costs more than it saves.
constexpr std::size_t kParallelWorkThreshold = 16384;

void check_shapes(std::span<const double> a, std::size_t na, std::span<const double> b,
                  std::size_t nb, std::size_t dim) {
    if (dim == 0) {
        throw ArgumentError("max_similarity: dim must be positive");
    }
    if (a.size() != na * dim || b.size() != nb * dim) {
        throw ArgumentError("max_similarity: flat data does not match row count * dim");
    }
    if (nb == 0) {
        throw ArgumentError("max_similarity: reference matrix has no rows");
    }
}

double row_max(const double* a_row, std::span<const double> b, std::size_t nb, std::size_t dim) {
    double best = -1.0;
    for (std::size_t j = 0; j < nb; ++j) {
        const double* b_row = b.data() + j * dim;
        double dot = 0.0;
        for (std::size_t k = 0; k < dim; ++k) dot += a_row[k] * b_row[k];
        best = std::max(best, dot);
    }
    return best;
}

}  // namespace

std::vector<double> max_similarity_serial(std::span<const double> a, std::size_t na,
                                          std::span<const double> b, std::size_t nb,
                                          std::size_t dim) {
    check_shapes(a, na, b, nb, dim);
    std::vector<double> out(na);
    for (std::size_t i = 0; i < na; ++i) {
        out[i] = row_max(a.data() + i * dim, b, nb, dim);
    }
    return out;
}

std::vector<double> max_similarity_parallel(std::span<const double> a, std::size_t na,
                                            std::span<const double> b, std::size_t nb,
                                            std::size_t dim) {
    check_shapes(a, na, b, nb, dim);
    std::vector<double> out(na);
    const long long rows = static_cast<long long>(na);
#pragma omp parallel for
    for (long long i = 0; i < rows; ++i) {
        out[static_cast<std::size_t>(i)] =
            row_max(a.data() + static_cast<std::size_t>(i) * dim, b, nb, dim);
    }
    return out;
}

std::vector<double> max_similarity(std::span<const double> a, std::size_t na,
                                   std::span<const double> b, std::size_t nb, std::size_t dim) {
    if (na * nb * dim >= kParallelWorkThreshold) {
        return max_similarity_parallel(a, na, b, nb, dim);
    }
    return max_similarity_serial(a, na, b, nb, dim);
}

std::vector<MatchResult> match_images_serial(std::span<const ImageDetections> images,
                                             double alpha) {
    std::vector<MatchResult> out(images.size());
    for (std::size_t i = 0; i < images.size(); ++i) {
        out[i] = match_detections(images[i].predictions, images[i].ground_truth, alpha);
    }
    return out;
}

std::vector<MatchResult> match_images_parallel(std::span<const ImageDetections> images,
                                               double alpha) {
    // Validate once up front so worker threads cannot throw.
    if (!(alpha > 0.0) || alpha > 1.0) {
        throw ArgumentError("match_images_parallel: alpha must be in (0, 1], got " +
                            std::to_string(alpha));
    }
    std::vector<MatchResult> out(images.size());
    const long long count = static_cast<long long>(images.size());
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < count; ++i) {
        out[static_cast<std::size_t>(i)] =
            match_detections(images[static_cast<std::size_t>(i)].predictions,
                             images[static_cast<std::size_t>(i)].ground_truth, alpha);
    }
    return out;
}

}  // namespace hazguard
