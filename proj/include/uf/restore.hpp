#pragma once

#include "uf/image.hpp"
#include "uf/net.hpp"

namespace uf {

// Runs one image through the model in eval mode and clamps to [0,1].
//
// With pad_input set, the source is reflection-padded just enough that the
// network output covers the original extents, and the output is center
// cropped back to them, so restored images align with their inputs. Without
// it the raw image is fed through and the result keeps the shrunken extents
// (DataError if the image is below the minimum input size).
GrayImage restore_image(Model& m, const GrayImage& img, bool pad_input);

}  // namespace uf
