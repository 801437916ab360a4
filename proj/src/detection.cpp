#include "hazguard/detection.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

#include "hazguard/errors.hpp"

namespace hazguard {

namespace {

struct ClassInfo {
    ObjectClass cls;
    std::string_view name;
    std::string_view prefix;
};

constexpr std::array<ClassInfo, kNumObjectClasses> kClassTable{{
    {ObjectClass::Worker, "Worker", "w"},
    {ObjectClass::CementTruck, "Cement Truck", "ct"},
    {ObjectClass::Compactor, "Compactor", "cp"},
    {ObjectClass::Dozer, "Dozer", "dz"},
    {ObjectClass::DumpTruck, "Dump Truck", "dt"},
    {ObjectClass::Excavator, "Excavator", "ex"},
    {ObjectClass::Grader, "Grader", "gr"},
    {ObjectClass::MobileCrane, "Mobile Crane", "mc"},
    {ObjectClass::TowerCrane, "Tower Crane", "tc"},
    {ObjectClass::WheelLoader, "Wheel Loader", "wl"},
    {ObjectClass::BackhoeLoader, "Backhoe Loader", "bl"},
}};

std::string fold_name(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (c == '_') {
            out.push_back(' ');
        } else {
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    return out;
}

}  // namespace

const std::array<ObjectClass, kNumObjectClasses>& all_object_classes() {
    static const std::array<ObjectClass, kNumObjectClasses> classes = [] {
        std::array<ObjectClass, kNumObjectClasses> a{};
        for (int i = 0; i < kNumObjectClasses; ++i) {
            a[static_cast<std::size_t>(i)] = kClassTable[static_cast<std::size_t>(i)].cls;
        }
        return a;
    }();
    return classes;
}

std::string_view class_name(ObjectClass cls) {
    return kClassTable[static_cast<std::size_t>(cls)].name;
}

std::string_view class_prefix(ObjectClass cls) {
    return kClassTable[static_cast<std::size_t>(cls)].prefix;
}

std::optional<ObjectClass> class_from_name(std::string_view name) {
    const std::string folded = fold_name(name);
    for (const ClassInfo& info : kClassTable) {
        if (folded == fold_name(info.name)) {
            return info.cls;
        }
    }
    return std::nullopt;
}

std::vector<Detection> filter_detections(std::span<const Detection> detections,
                                         double score_threshold) {
    if (score_threshold < 0.0 || score_threshold > 1.0) {
        throw ArgumentError("filter_detections: threshold must lie in [0,1]");
    }
    std::vector<Detection> kept;
    kept.reserve(detections.size());
    for (const Detection& d : detections) {
        if (d.score >= score_threshold) {
            kept.push_back(d);
        }
    }
    return kept;
}

std::vector<IdentifiedDetection> assign_identifiers(std::span<const Detection> detections) {
    // Sort indices per class by (cx, cy, -score); input index last keeps the
    // comparison total for fully identical detections.
    std::vector<std::size_t> order(detections.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t ia, std::size_t ib) {
        const Detection& a = detections[ia];
        const Detection& b = detections[ib];
        if (a.cls != b.cls) return a.cls < b.cls;
        if (a.box.cx != b.box.cx) return a.box.cx < b.box.cx;
        if (a.box.cy != b.box.cy) return a.box.cy < b.box.cy;
        if (a.score != b.score) return a.score > b.score;
        if (a.box.w != b.box.w) return a.box.w < b.box.w;
        if (a.box.h != b.box.h) return a.box.h < b.box.h;
        return ia < ib;
    });

    std::vector<IdentifiedDetection> out;
    out.reserve(detections.size());
    std::array<int, kNumObjectClasses> next_index{};
    next_index.fill(1);
    for (std::size_t idx : order) {
        const Detection& d = detections[idx];
        const int n = next_index[static_cast<std::size_t>(d.cls)]++;
        out.push_back(IdentifiedDetection{d, std::string(class_prefix(d.cls)) + std::to_string(n)});
    }
    return out;
}

}  // namespace hazguard
