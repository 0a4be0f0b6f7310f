import { describe, expect, it } from "vitest";
import { formatCents } from "../src/money.js";

describe("money formatting", () => {
  it("renders integer cents as dollars", () => {
    expect(formatCents(0)).toBe("$0.00");
    expect(formatCents(5)).toBe("$0.05");
    expect(formatCents(105)).toBe("$1.05");
    expect(formatCents(4498)).toBe("$44.98");
    expect(formatCents(125000)).toBe("$1250.00");
  });

  it("keeps the sign outside the symbol", () => {
    expect(formatCents(-995)).toBe("-$9.95");
  });

  it("falls back to the currency code for non-USD", () => {
    expect(formatCents(100, "EUR")).toBe("EUR 1.00");
  });
});
