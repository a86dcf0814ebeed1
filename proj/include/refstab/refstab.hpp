#pragma once

#include "refstab/analysis.hpp"
#include "refstab/attest.hpp"
#include "refstab/claims.hpp"
#include "refstab/digest.hpp"
#include "refstab/drift.hpp"
#include "refstab/ledger.hpp"
#include "refstab/model.hpp"
#include "refstab/probe.hpp"
#include "refstab/simulator.hpp"
#include "refstab/stability.hpp"
#include "refstab/util.hpp"
