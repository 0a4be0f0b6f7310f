import { describe, expect, it } from "vitest";
import { canonicalJson, newClientKeyBytes, sealEnvelope, toBase64 } from "../src/sealing.js";

function fromBase64(b64: string): Uint8Array {
  return Uint8Array.from(atob(b64), (c) => c.charCodeAt(0));
}

describe("canonical payload serialization", () => {
  it("sorts keys and emits no whitespace", () => {
    expect(canonicalJson({ b: 1, a: "x" })).toBe('{"a":"x","b":1}');
    expect(canonicalJson({ z: { d: 2, c: 1 }, a: [1, 2] }))
      .toBe('{"a":[1,2],"z":{"c":1,"d":2}}');
  });

  it("matches JSON for scalars", () => {
    expect(canonicalJson("s")).toBe('"s"');
    expect(canonicalJson(1250)).toBe("1250");
    expect(canonicalJson(null)).toBe("null");
  });
});

describe("envelope sealing", () => {
  it("produces the gateway wire format", async () => {
    const key = newClientKeyBytes();
    const env = await sealEnvelope(key, "ck_test", { pan: "4242424242424242", amount: 100 });
    expect(env.key_id).toBe("ck_test");
    expect(fromBase64(env.nonce).length).toBe(12);
    expect(fromBase64(env.ciphertext).length).toBeGreaterThan(16); // payload + tag
  });

  it("round-trips under the same key and key id", async () => {
    const key = newClientKeyBytes();
    const payload = { amount: 4498, currency: "USD", pan: "4242424242424242" };
    const env = await sealEnvelope(key, "ck_rt", payload);
    const imported = await crypto.subtle.importKey(
      "raw", key as BufferSource, { name: "AES-GCM" }, false, ["decrypt"]);
    const plain = await crypto.subtle.decrypt(
      {
        name: "AES-GCM",
        iv: fromBase64(env.nonce) as BufferSource,
        additionalData: new TextEncoder().encode("ck_rt"),
      },
      imported,
      fromBase64(env.ciphertext) as BufferSource,
    );
    expect(new TextDecoder().decode(plain)).toBe(canonicalJson(payload));
  });

  it("binds the key id into the tag", async () => {
    const key = newClientKeyBytes();
    const env = await sealEnvelope(key, "ck_real", { amount: 1 });
    const imported = await crypto.subtle.importKey(
      "raw", key as BufferSource, { name: "AES-GCM" }, false, ["decrypt"]);
    await expect(crypto.subtle.decrypt(
      {
        name: "AES-GCM",
        iv: fromBase64(env.nonce) as BufferSource,
        additionalData: new TextEncoder().encode("ck_other"),
      },
      imported,
      fromBase64(env.ciphertext) as BufferSource,
    )).rejects.toBeTruthy();
  });

  it("never repeats a nonce under one key", async () => {
    const key = newClientKeyBytes();
    const seen = new Set<string>();
    for (let i = 0; i < 100; i++) {
      const env = await sealEnvelope(key, "ck_n", { i });
      expect(seen.has(env.nonce)).toBe(false);
      seen.add(env.nonce);
    }
  });

  it("generates distinct 32-byte keys", () => {
    const a = newClientKeyBytes();
    const b = newClientKeyBytes();
    expect(a.length).toBe(32);
    expect(toBase64(a)).not.toBe(toBase64(b));
  });
});
