// jsdom has no SubtleCrypto; splice in node's WebCrypto so sealing works.
import { webcrypto } from "node:crypto";

const current = globalThis.crypto as Crypto | undefined;
if (!current || !("subtle" in current) || !current.subtle) {
  Object.defineProperty(globalThis, "crypto", {
    value: webcrypto,
    configurable: true,
  });
}
