/// Calls `f` once for every permutation of `0..n` (Heap's algorithm).
pub fn for_each_permutation<F: FnMut(&[usize])>(n: usize, mut f: F) {
    let mut a: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    f(&a);
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            f(&a);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

pub fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}
