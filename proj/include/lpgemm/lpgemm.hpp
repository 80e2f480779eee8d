#pragma once

#include "lpgemm/core.hpp"
#include "lpgemm/packing.hpp"
#include "lpgemm/microkernel.hpp"
#include "lpgemm/kernels.hpp"
#include "lpgemm/layout_ops.hpp"
#include "lpgemm/attention.hpp"
#include "lpgemm/random.hpp"
#include "lpgemm/tensor_io.hpp"
