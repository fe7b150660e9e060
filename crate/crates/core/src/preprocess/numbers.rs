//! Digit strings to English number words, e.g. `"215"` → `two hundred fifteen`.

const ONES: [&str; 20] = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
    "eleven", "twelve", "thirteen", "fourteen", "fifteen", "sixteen", "seventeen", "eighteen",
    "nineteen",
];
const TENS: [&str; 10] = [
    "", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety",
];
const SCALES: [&str; 7] = [
    "",
    "thousand",
    "million",
    "billion",
    "trillion",
    "quadrillion",
    "quintillion",
];

fn below_thousand(n: u64, out: &mut Vec<String>) {
    let hundreds = n / 100;
    let rest = n % 100;
    if hundreds > 0 {
        out.push(ONES[hundreds as usize].to_string());
        out.push("hundred".to_string());
    }
    if rest >= 20 {
        out.push(TENS[(rest / 10) as usize].to_string());
        if rest % 10 > 0 {
            out.push(ONES[(rest % 10) as usize].to_string());
        }
    } else if rest > 0 {
        out.push(ONES[rest as usize].to_string());
    }
}

/// Converts an ASCII digit string to words. Leading zeros and strings too long
/// for a `u64` are read digit by digit.
pub fn digits_to_words(digits: &str) -> Vec<String> {
    debug_assert!(digits.bytes().all(|b| b.is_ascii_digit()));
    let parsed = if digits.len() > 1 && digits.starts_with('0') {
        None
    } else {
        digits.parse::<u64>().ok()
    };
    let Some(mut n) = parsed else {
        return digits
            .bytes()
            .map(|b| ONES[(b - b'0') as usize].to_string())
            .collect();
    };
    if n == 0 {
        return vec![ONES[0].to_string()];
    }
    let mut groups = Vec::new();
    while n > 0 {
        groups.push(n % 1000);
        n /= 1000;
    }
    let mut out = Vec::new();
    for (scale, &group) in groups.iter().enumerate().rev() {
        if group == 0 {
            continue;
        }
        below_thousand(group, &mut out);
        if scale > 0 {
            out.push(SCALES[scale].to_string());
        }
    }
    out
}
