#include <math.h>
#include <stdio.h>
#include <string.h>
#include "formbound.h"

#define CHECK(x) do { if (!(x)) { fprintf(stderr, "failed: %s (%s)\n", #x, fb_last_error() ? fb_last_error() : ""); return 1; } } while (0)

int main(void) {
    FbGrid *grid = NULL;
    CHECK(fb_grid_new(3, 16, 1.0, &grid) == FB_STATUS_OK);
    CHECK(fb_grid_new(3, 15, 1.0, &grid) == FB_STATUS_INVALID_ARGUMENT);
    CHECK(fb_last_error() != NULL);

    FbField *mu = NULL;
    CHECK(fb_preset_measure(grid, "lebesgue", &mu) == FB_STATUS_OK);
    double c = 0.0;
    CHECK(fb_carleson_constant(mu, &c) == FB_STATUS_OK);
    CHECK(fabs(c - 4.0 / 3.0 * (1.0 - pow(4.0, -5.0))) < 1e-12);

    FbField *b = NULL;
    CHECK(fb_preset_drift(grid, "vortex", 0, &b) == FB_STATUS_OK);
    FbReport *report = NULL;
    CHECK(fb_verdict(FB_PIPELINE_HOMOGENEOUS, NULL, b, NULL, &report) == FB_STATUS_OK);
    CHECK(fb_report_overall(report) == FB_OVERALL_CERTIFIED_BOUNDED);
    CHECK(strstr(fb_report_json(report), "\"overall\": \"certified_bounded\"") != NULL);

    fb_report_free(report);
    fb_field_free(b);
    fb_field_free(mu);
    fb_grid_free(grid);
    printf("ok\n");
    return 0;
}
