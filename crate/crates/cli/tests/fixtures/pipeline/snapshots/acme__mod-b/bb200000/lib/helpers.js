const clamp = (x, lo, hi) => Math.min(hi, Math.max(lo, x));
function sanitize(s) {
  return s.replace(/[<>]/g, '');
}
