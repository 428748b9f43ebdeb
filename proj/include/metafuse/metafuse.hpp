#pragma once

#include "metafuse/association.hpp"
#include "metafuse/batch.hpp"
#include "metafuse/csv.hpp"
#include "metafuse/data_list.hpp"
#include "metafuse/distance.hpp"
#include "metafuse/label_propagation.hpp"
#include "metafuse/meta_cluster.hpp"
#include "metafuse/settings.hpp"
#include "metafuse/snf.hpp"
#include "metafuse/spectral.hpp"
#include "metafuse/stability.hpp"
#include "metafuse/stats.hpp"
#include "metafuse/synthetic.hpp"
#include "metafuse/ui_bundle.hpp"
