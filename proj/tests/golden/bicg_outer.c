// Generated by polyred. Do not edit.
//
// schedule:
//   R: (0, i, 0)
//   S: (0, i, 1, j, 0)
//   T: (0, i, 1, j, 1)
// classification:
//   R: parallel parallel sequential parallel parallel
//   S: parallel parallel sequential reduction-parallel parallel
//   T: parallel reduction-parallel parallel parallel parallel
// privatization: dim 1, hoist 0, priv_s

#include <omp.h>

#ifndef NUM_CONTEXTS
#define NUM_CONTEXTS 4
#endif

void bicg(long long NX, long long NY, long long A[NX][NY], long long p[NY], long long q[NX], long long r[NX], long long s[NY]) {
  long long priv_s[NUM_CONTEXTS][NY];
  for (int c = 0; c < NUM_CONTEXTS; c++)
    for (long long loc0 = 0; loc0 < NY; loc0++)
      priv_s[c][loc0] = 0;
  #pragma omp parallel for
  for (long long i = 0; i <= NX - 1; i++) {
    const int ctx = omp_get_thread_num() % NUM_CONTEXTS;
    q[i] = 0;
    for (long long j = 0; j <= NY - 1; j++) {
      q[i] = q[i] + A[i][j] * p[j];
      priv_s[ctx][j] = priv_s[ctx][j] + r[i] * A[i][j];
    }
  }
  for (long long loc0 = 0; loc0 < NY; loc0++)
    for (int c = 0; c < NUM_CONTEXTS; c++)
      s[loc0] = s[loc0] + priv_s[c][loc0];
}
