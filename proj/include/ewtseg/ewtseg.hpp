#pragma once

#include "ewtseg/bank.hpp"
#include "ewtseg/boundaries.hpp"
#include "ewtseg/classify.hpp"
#include "ewtseg/common.hpp"
#include "ewtseg/components.hpp"
#include "ewtseg/config.hpp"
#include "ewtseg/datagen.hpp"
#include "ewtseg/features.hpp"
#include "ewtseg/fft.hpp"
#include "ewtseg/io.hpp"
#include "ewtseg/metrics.hpp"
#include "ewtseg/spectral.hpp"
#include "ewtseg/transform.hpp"
