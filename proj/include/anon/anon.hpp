#pragma once

#include "anon/error.hpp"
#include "anon/unicode.hpp"
#include "anon/types.hpp"
#include "anon/hash.hpp"
#include "anon/corpus.hpp"
#include "anon/tokenize.hpp"
#include "anon/iob2.hpp"
#include "anon/dataset.hpp"
#include "anon/protocol.hpp"
#include "anon/detectors.hpp"
#include "anon/uniformizer.hpp"
#include "anon/redactor.hpp"
#include "anon/evaluator.hpp"
#include "anon/json_io.hpp"
#include "anon/project.hpp"
#include "anon/http_client.hpp"
#include "anon/service.hpp"
