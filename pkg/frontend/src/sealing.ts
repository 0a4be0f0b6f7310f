// Card payloads leave the browser only inside an AES-256-GCM envelope.
// Wire format matches the gateway: key_id in clear and bound in as
// associated data, 96-bit random nonce, base64 fields, payload serialized
// as canonical JSON (sorted keys, no whitespace) so both sides authenticate
// identical bytes.

export interface Envelope {
  key_id: string;
  nonce: string;
  ciphertext: string;
}

const NONCE_BYTES = 12;

export function newClientKeyBytes(): Uint8Array {
  const key = new Uint8Array(32);
  crypto.getRandomValues(key);
  return key;
}

export function toBase64(bytes: Uint8Array): string {
  let bin = "";
  for (const b of bytes) bin += String.fromCharCode(b);
  return btoa(bin);
}

export function canonicalJson(value: unknown): string {
  if (value === null || typeof value !== "object" || Array.isArray(value)) {
    if (Array.isArray(value)) {
      return "[" + value.map(canonicalJson).join(",") + "]";
    }
    return JSON.stringify(value);
  }
  const obj = value as Record<string, unknown>;
  const parts = Object.keys(obj)
    .sort()
    .map((k) => JSON.stringify(k) + ":" + canonicalJson(obj[k]));
  return "{" + parts.join(",") + "}";
}

export async function sealEnvelope(
  keyBytes: Uint8Array,
  keyId: string,
  payload: Record<string, unknown>,
): Promise<Envelope> {
  const key = await crypto.subtle.importKey(
    "raw", keyBytes as BufferSource, { name: "AES-GCM" }, false, ["encrypt"]);
  const nonce = new Uint8Array(NONCE_BYTES);
  crypto.getRandomValues(nonce);
  const plaintext = new TextEncoder().encode(canonicalJson(payload));
  const ciphertext = await crypto.subtle.encrypt(
    { name: "AES-GCM", iv: nonce, additionalData: new TextEncoder().encode(keyId) },
    key,
    plaintext,
  );
  return {
    key_id: keyId,
    nonce: toBase64(nonce),
    ciphertext: toBase64(new Uint8Array(ciphertext)),
  };
}
