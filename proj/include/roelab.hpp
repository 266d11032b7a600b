#pragma once

#include "roelab/space.hpp"
#include "roelab/linalg.hpp"
#include "roelab/delone.hpp"
#include "roelab/chabauty.hpp"
#include "roelab/pou.hpp"
#include "roelab/gram.hpp"
#include "roelab/cells.hpp"
#include "roelab/roe.hpp"
#include "roelab/field.hpp"
#include "roelab/io.hpp"
#include "roelab/experiment.hpp"
