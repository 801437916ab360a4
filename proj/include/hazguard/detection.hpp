#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hazguard/geometry.hpp"

namespace hazguard {

/// The object taxonomy: workers plus ten machinery categories.
enum class ObjectClass {
    Worker,
    CementTruck,
    Compactor,
    Dozer,
    DumpTruck,
    Excavator,
    Grader,
    MobileCrane,
    TowerCrane,
    WheelLoader,
    BackhoeLoader,
};

inline constexpr int kNumObjectClasses = 11;

/// All classes in canonical taxonomy order.
const std::array<ObjectClass, kNumObjectClasses>& all_object_classes();

/// Display name, e.g. "Dump Truck".
std::string_view class_name(ObjectClass cls);

/// Identifier prefix, e.g. "dt". Prefixes are unique across classes.
std::string_view class_prefix(ObjectClass cls);

/// Looks up a class by display name. Matching is case-insensitive and
/// tolerant of underscores standing in for spaces.
std::optional<ObjectClass> class_from_name(std::string_view name);

struct Detection {
    BoundingBox box;
    ObjectClass cls = ObjectClass::Worker;
    double score = 0.0;  // confidence in [0,1]
};

/// A detection plus its deterministic textual identifier ("w1", "ex2", ...).
struct IdentifiedDetection {
    Detection detection;
    std::string id;
};

/// Keeps detections with score >= threshold, preserving relative order.
std::vector<Detection> filter_detections(std::span<const Detection> detections,
                                         double score_threshold);

/// Assigns per-class identifiers by left-to-right ordering of box centers.
/// Ties on cx break by ascending cy, then descending score, then input order.
/// Output is ordered by class (taxonomy order), then by index, so the result
/// is a deterministic function of the detection multiset.
std::vector<IdentifiedDetection> assign_identifiers(std::span<const Detection> detections);

}  // namespace hazguard
