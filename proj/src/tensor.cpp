#include "tspfcn/tensor.hpp"

namespace tspfcn {

std::string shape_str(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) {
            s += ",";
        }
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d < 0) {
            throw ShapeError("negative dimension in shape " + shape_str(shape));
        }
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

} // namespace tspfcn
