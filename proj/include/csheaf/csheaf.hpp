#pragma once

#include "csheaf/error.hpp"
#include "csheaf/parallel.hpp"
#include "csheaf/fincat.hpp"
#include "csheaf/site.hpp"
#include "csheaf/presheaf.hpp"
#include "csheaf/site_validation.hpp"
#include "csheaf/simplicial.hpp"
#include "csheaf/constructions.hpp"
#include "csheaf/random.hpp"
#include "csheaf/quasitopos.hpp"
#include "csheaf/io.hpp"
#include "csheaf/laws.hpp"
