import { describe, expect, it } from "vitest";
import { luhnValid } from "../src/luhn.js";

describe("card checksum gate", () => {
  it("accepts the sandbox issuer fixtures", () => {
    for (const pan of [
      "4242424242424242",
      "4000000000000002",
      "4000000000000119",
      "4000000000009995",
    ]) {
      expect(luhnValid(pan)).toBe(true);
    }
  });

  it("rejects a one-digit slip", () => {
    expect(luhnValid("4242424242424241")).toBe(false);
    expect(luhnValid("4242424242424224")).toBe(false);
  });

  it("enforces the 12-19 digit window like the server", () => {
    expect(luhnValid("49927398716")).toBe(false); // valid sum, 11 digits
    expect(luhnValid("4".repeat(20))).toBe(false);
    expect(luhnValid("")).toBe(false);
  });

  it("rejects non-digits outright", () => {
    expect(luhnValid("4242 4242 4242 4242")).toBe(false);
    expect(luhnValid("424242424242424x")).toBe(false);
  });
});
