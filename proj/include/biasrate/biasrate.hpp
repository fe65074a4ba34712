#pragma once

#include "biasrate/cache.hpp"
#include "biasrate/composition.hpp"
#include "biasrate/core.hpp"
#include "biasrate/datagen.hpp"
#include "biasrate/engine.hpp"
#include "biasrate/errors.hpp"
#include "biasrate/extraction.hpp"
#include "biasrate/factory.hpp"
#include "biasrate/http.hpp"
#include "biasrate/mock.hpp"
#include "biasrate/report.hpp"
#include "biasrate/services.hpp"
#include "biasrate/stats.hpp"
