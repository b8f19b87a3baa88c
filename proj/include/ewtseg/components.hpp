#pragma once

#include <vector>

#include "ewtseg/common.hpp"

namespace ewtseg {

struct Components {
    Grid<int> ids;           // component id per pixel, numbered in raster order of first pixel
    std::vector<int> sizes;  // pixel count per component
    std::vector<int> label;  // class label per component

    [[nodiscard]] int count() const { return static_cast<int>(sizes.size()); }
};

/// 4-connected components of equal-label pixels.
inline Components label_components(const Grid<int>& labels) {
    Components c;
    c.ids = Grid<int>(labels.width, labels.height, -1);
    std::vector<int> stack;
    const int w = labels.width, h = labels.height;
    for (int start = 0; start < static_cast<int>(labels.size()); ++start) {
        if (c.ids.data[start] >= 0) continue;
        const int id = c.count();
        const int lab = labels.data[start];
        c.sizes.push_back(0);
        c.label.push_back(lab);
        c.ids.data[start] = id;
        stack.push_back(start);
        while (!stack.empty()) {
            const int p = stack.back();
            stack.pop_back();
            ++c.sizes[id];
            const int x = p % w, y = p / w;
            const int nb[4] = {x > 0 ? p - 1 : -1, x + 1 < w ? p + 1 : -1, y > 0 ? p - w : -1, y + 1 < h ? p + w : -1};
            for (int q : nb)
                if (q >= 0 && c.ids.data[q] < 0 && labels.data[q] == lab) {
                    c.ids.data[q] = id;
                    stack.push_back(q);
                }
        }
    }
    return c;
}

}  // namespace ewtseg
