// Number formatting matching the pipeline's display rule (six significant
// digits, trailing zeros stripped, scientific notation outside 1e-4..1e6
// with a two-digit exponent).  The bundle already carries preformatted
// strings; this formatter exists so tooltip values can be proven
// byte-identical to formatting the results file directly.

export function formatSig(value: number | null, digits = 6): string {
  if (value === null) return "";
  if (Number.isNaN(value)) return "nan";
  if (value === 0) return Object.is(value, -0) ? "-0" : "0";
  const exponent = Math.floor(Math.log10(Math.abs(value)));
  let out: string;
  if (exponent < -4 || exponent >= digits) {
    out = value.toExponential(digits - 1);
    const [mantissa, exp] = out.split("e");
    const trimmed = trimZeros(mantissa);
    const sign = exp.startsWith("-") ? "-" : "+";
    const expDigits = exp.replace(/^[+-]/, "").padStart(2, "0");
    out = `${trimmed}e${sign}${expDigits}`;
  } else {
    out = trimZeros(value.toFixed(Math.max(digits - 1 - exponent, 0)));
  }
  return out;
}

function trimZeros(text: string): string {
  if (!text.includes(".")) return text;
  return text.replace(/0+$/, "").replace(/\.$/, "");
}
