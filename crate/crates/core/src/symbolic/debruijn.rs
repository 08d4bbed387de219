use super::{SymbolWord, SymbolicError};

/// Largest de Bruijn word produced, in symbols.
pub const DEBRUIJN_MAX_LEN: u64 = 1 << 26;

/// Linear de Bruijn word of the given order: length `M^order + order − 1`,
/// containing every word of length `order` exactly once as a factor.
///
/// The cyclic sequence comes from the Fredricksen–Kessler–Maiorana
/// concatenation of Lyndon words, so the output begins with `0^order`.
pub fn debruijn(alphabet: u8, order: u32) -> Result<SymbolWord, SymbolicError> {
    let too_large = SymbolicError::OrderTooLarge { alphabet, order };
    if order == 0 {
        return Err(too_large);
    }
    let count = (alphabet as u64)
        .checked_pow(order)
        .filter(|&c| c <= DEBRUIJN_MAX_LEN)
        .ok_or(too_large)?;

    let n = order as usize;
    let k = alphabet;
    let mut cyclic: Vec<u8> = Vec::with_capacity(count as usize);
    let mut a = vec![0u8; n + 1];
    // Iterative FKM: generate prenecklaces in lexicographic order.
    let mut t = 1usize;
    loop {
        if n.is_multiple_of(t) {
            cyclic.extend_from_slice(&a[1..=t]);
        }
        // Next prenecklace.
        let mut i = n;
        while i > 0 && a[i] == k - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        a[i] += 1;
        for j in i + 1..=n {
            a[j] = a[j - i];
        }
        t = i;
    }
    debug_assert_eq!(cyclic.len() as u64, count);
    let wrap: Vec<u8> = cyclic[..n - 1].to_vec();
    cyclic.extend_from_slice(&wrap);
    SymbolWord::from_symbols(alphabet, &cyclic)
}
