#include <math.h>
#include <stdio.h>
#include "corrdyn.h"

/* (y - 2x)(y - 3x) = y^2 - 5xy + 6x^2 */
int main(void) {
    double re[9] = {0, 0, 1, 0, -5, 0, 6, 0, 0};
    double im[9] = {0};
    CdCorrespondence *f = NULL;
    if (corrdyn_correspondence_new(2, 2, re, im, &f) != CD_STATUS_OK) {
        fprintf(stderr, "new: %s\n", corrdyn_last_error());
        return 1;
    }
    CdPeriodicSet *s = NULL;
    if (corrdyn_periodic_points(f, 1, &s) != CD_STATUS_OK) return 2;
    size_t count = 0, diag = 0;
    corrdyn_periodic_count(s, &count, &diag);
    printf("count %zu rows %zu\n", count, corrdyn_periodic_len(s));
    CdPoint a = {0, 0.5, 0.0};
    CdCloud *mu = NULL;
    if (corrdyn_cloud_new(f, a, 20, 5000, 1, 0, &mu) != CD_STATUS_OK) return 3;
    CdPoint zero = {0, 0.0, 0.0};
    double mass = 0;
    corrdyn_cloud_mass_near(mu, zero, 1e-5, &mass);
    printf("mass %.6f\n", mass);
    double bad_re[1] = {1}, bad_im[1] = {0};
    CdCorrespondence *g = NULL;
    CdStatus st = corrdyn_correspondence_new(0, 0, bad_re, bad_im, &g);
    printf("constant %d %s\n", (int)st, corrdyn_last_error());
    corrdyn_cloud_free(mu);
    corrdyn_periodic_free(s);
    corrdyn_correspondence_free(f);
    return 0;
}
