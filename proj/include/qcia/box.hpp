#pragma once

namespace qcia {

// Axis-aligned box, pixel units, (x, y) top-left.
struct Box {
    double x = 0, y = 0, w = 0, h = 0;

    double area() const { return w * h; }
    bool operator==(const Box& other) const = default;
};

// Intersection over union; 0 for disjoint boxes.
double iou(const Box& a, const Box& b);

}  // namespace qcia
