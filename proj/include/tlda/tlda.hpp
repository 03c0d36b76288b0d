// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "tlda/classify.hpp"
#include "tlda/discriminant.hpp"
#include "tlda/errors.hpp"
#include "tlda/io.hpp"
#include "tlda/parallel.hpp"
#include "tlda/robust.hpp"
#include "tlda/tensor.hpp"
#include "tlda/tl_algebra.hpp"
#include "tlda/transforms.hpp"
