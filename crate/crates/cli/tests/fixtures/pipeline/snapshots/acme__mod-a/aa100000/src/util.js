const double = (x) => x * 2;
function triple(x) {
  return x * 3;
}
