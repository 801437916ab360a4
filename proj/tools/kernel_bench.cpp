// Compares the serial reference kernels against the parallel ones: same
// inputs, bitwise-compared outputs, wall time per variant.
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hazguard/detection.hpp"
#include "hazguard/detection_metrics.hpp"
#include "hazguard/geometry.hpp"
#include "hazguard/kernels.hpp"

namespace {

using namespace hazguard;
using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::vector<double> random_unit_rows(std::mt19937_64& rng, std::size_t rows, std::size_t dim) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> data(rows * dim);
    for (std::size_t r = 0; r < rows; ++r) {
        double norm_sq = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
            const double v = normal(rng);
            data[r * dim + d] = v;
            norm_sq += v * v;
        }
        const double norm = std::sqrt(norm_sq);
        for (std::size_t d = 0; d < dim; ++d) {
            data[r * dim + d] /= norm > 0.0 ? norm : 1.0;
        }
    }
    return data;
}

std::vector<Detection> random_detections(std::mt19937_64& rng, std::size_t count) {
    std::uniform_real_distribution<double> center(0.2, 0.8);
    std::uniform_real_distribution<double> extent(0.05, 0.3);
    std::uniform_real_distribution<double> score(0.0, 1.0);
    std::uniform_int_distribution<int> cls(0, kNumObjectClasses - 1);
    std::vector<Detection> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Detection det;
        det.box = BoundingBox{center(rng), center(rng), extent(rng), extent(rng)};
        det.cls = static_cast<ObjectClass>(cls(rng));
        det.score = score(rng);
        out.push_back(det);
    }
    return out;
}

void bench_similarity(std::size_t na, std::size_t nb, std::size_t dim, int repeats,
                      std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const std::vector<double> a = random_unit_rows(rng, na, dim);
    const std::vector<double> b = random_unit_rows(rng, nb, dim);

    std::vector<double> serial_out;
    std::vector<double> parallel_out;
    double serial_ms = 0.0;
    double parallel_ms = 0.0;
    for (int r = 0; r < repeats; ++r) {
        auto start = Clock::now();
        serial_out = max_similarity_serial(a, na, b, nb, dim);
        serial_ms += elapsed_ms(start);
        start = Clock::now();
        parallel_out = max_similarity_parallel(a, na, b, nb, dim);
        parallel_ms += elapsed_ms(start);
    }

    bool identical = serial_out.size() == parallel_out.size();
    double max_diff = 0.0;
    for (std::size_t i = 0; identical && i < serial_out.size(); ++i) {
        if (serial_out[i] != parallel_out[i]) {
            identical = false;
        }
        max_diff = std::max(max_diff, std::abs(serial_out[i] - parallel_out[i]));
    }

    std::printf("max_similarity  na=%-5zu nb=%-5zu dim=%-4zu  serial %9.3f ms  parallel %9.3f ms"
                "  speedup %5.2fx  bitwise_equal=%s\n",
                na, nb, dim, serial_ms / repeats, parallel_ms / repeats,
                parallel_ms > 0.0 ? serial_ms / parallel_ms : 0.0, identical ? "yes" : "NO");
    if (!identical) {
        std::printf("  max abs diff: %.3e\n", max_diff);
    }
}

void bench_matching(std::size_t images, std::size_t per_image, int repeats, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<ImageDetections> batch(images);
    for (std::size_t i = 0; i < images; ++i) {
        batch[i].predictions = random_detections(rng, per_image);
        for (const Detection& det : random_detections(rng, per_image)) {
            batch[i].ground_truth.push_back(GroundTruth{det.box, det.cls});
        }
    }

    std::vector<MatchResult> serial_out;
    std::vector<MatchResult> parallel_out;
    double serial_ms = 0.0;
    double parallel_ms = 0.0;
    for (int r = 0; r < repeats; ++r) {
        auto start = Clock::now();
        serial_out = match_images_serial(batch, 0.5);
        serial_ms += elapsed_ms(start);
        start = Clock::now();
        parallel_out = match_images_parallel(batch, 0.5);
        parallel_ms += elapsed_ms(start);
    }

    bool identical = serial_out.size() == parallel_out.size();
    for (std::size_t i = 0; identical && i < serial_out.size(); ++i) {
        identical = serial_out[i].true_positives == parallel_out[i].true_positives &&
                    serial_out[i].false_positives == parallel_out[i].false_positives &&
                    serial_out[i].false_negatives == parallel_out[i].false_negatives &&
                    serial_out[i].matches.size() == parallel_out[i].matches.size();
        for (std::size_t m = 0; identical && m < serial_out[i].matches.size(); ++m) {
            identical = serial_out[i].matches[m].prediction_index ==
                            parallel_out[i].matches[m].prediction_index &&
                        serial_out[i].matches[m].ground_truth_index ==
                            parallel_out[i].matches[m].ground_truth_index &&
                        serial_out[i].matches[m].iou == parallel_out[i].matches[m].iou;
        }
    }

    std::printf("match_images    images=%-4zu boxes=%-4zu          serial %9.3f ms  parallel"
                " %9.3f ms  speedup %5.2fx  equal=%s\n",
                images, per_image, serial_ms / repeats, parallel_ms / repeats,
                parallel_ms > 0.0 ? serial_ms / parallel_ms : 0.0, identical ? "yes" : "NO");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Serial vs parallel kernel comparison"};
    int repeats = 5;
    std::uint64_t seed = 17;
    app.add_option("--repeats", repeats, "Timed repetitions per case");
    app.add_option("--seed", seed, "Input generator seed");
    CLI11_PARSE(app, argc, argv);

    bench_similarity(32, 32, 64, repeats, seed);
    bench_similarity(128, 128, 256, repeats, seed + 1);
    bench_similarity(512, 512, 384, repeats, seed + 2);
    bench_matching(64, 16, repeats, seed + 3);
    bench_matching(256, 32, repeats, seed + 4);
    return 0;
}
