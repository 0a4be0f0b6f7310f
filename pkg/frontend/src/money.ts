// All amounts on the wire are integer cents; formatting happens only here.

export function formatCents(cents: number, currency = "USD"): string {
  const sign = cents < 0 ? "-" : "";
  const abs = Math.abs(cents);
  const units = Math.floor(abs / 100);
  const rest = String(abs % 100).padStart(2, "0");
  const symbol = currency === "USD" ? "$" : currency + " ";
  return `${sign}${symbol}${units}.${rest}`;
}
