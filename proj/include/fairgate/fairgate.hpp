#pragma once

#include "fairgate/audit_chain.hpp"
#include "fairgate/auditor.hpp"
#include "fairgate/canonical.hpp"
#include "fairgate/concept_graph.hpp"
#include "fairgate/data_table.hpp"
#include "fairgate/enforcement.hpp"
#include "fairgate/errors.hpp"
#include "fairgate/extractor.hpp"
#include "fairgate/metrics.hpp"
#include "fairgate/policy.hpp"
#include "fairgate/policy_io.hpp"
#include "fairgate/probe.hpp"
#include "fairgate/service.hpp"
#include "fairgate/session.hpp"
#include "fairgate/xml.hpp"
