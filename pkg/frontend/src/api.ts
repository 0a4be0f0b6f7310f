// Thin typed client over the JSON API. Every non-2xx response arrives as a
// uniform envelope {error_code, message, request_id}; this module turns it
// into ApiError so views can render inline messages, never raw envelopes.

export interface BootstrapConfig {
  api_base: string;
  sandbox: boolean;
  version: string;
  poll_interval_ms: number;
}

export interface Product {
  id: string;
  name: string;
  description?: string;
  category_id: string;
  unit_price: number;
  stock: number;
  image_ref?: string;
  active: boolean;
  revision: number;
}

export interface Category {
  id: string;
  name: string;
}

export interface CartLine {
  product_id: string;
  name: string;
  qty: number;
  unit_price_at_add: number;
}

export interface Cart {
  account_id: string;
  lines: CartLine[];
  total: number;
}

export interface Order {
  id: string;
  account_id: string;
  lines: CartLine[];
  total: number;
  status: string;
  payment_intent_id: string | null;
  history: { status: string; at: number }[];
}

export interface Intent {
  intent_id: string;
  order_id: string;
  amount: number;
  currency: string;
  method: string;
  status: string;
  decline_reason: string | null;
  confirmation: Record<string, unknown> | null;
}

export interface SecurityReport {
  unauthorized_attempts: number;
  successful_breaches: number;
  lockouts: number;
  recent_lockouts: { kind: string; email: string; timestamp: number; detail: string }[];
}

export interface OutboxEntry {
  challenge_id: string;
  email: string;
  code: string;
  issued_at: number;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public requestId: string,
  ) {
    super(message);
  }
}

export class Api {
  token: string | null = null; // memory only, on purpose

  constructor(public base: string = "") {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    const resp = await fetch(this.base + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const data = await resp.json();
    if (resp.status >= 400) {
      throw new ApiError(resp.status, data.error_code ?? "unknown",
        data.message ?? "request failed", data.request_id ?? "");
    }
    return data as T;
  }

  get = <T>(path: string) => this.request<T>("GET", path);
  post = <T>(path: string, body?: unknown) => this.request<T>("POST", path, body ?? {});
  put = <T>(path: string, body: unknown) => this.request<T>("PUT", path, body);
  del = <T>(path: string) => this.request<T>("DELETE", path);

  config() {
    return this.get<BootstrapConfig>("/app/config");
  }

  // -- auth ------------------------------------------------------------------

  register(email: string, password: string) {
    return this.post<{ account_id: string }>("/api/auth/register", { email, password });
  }

  login(email: string, password: string) {
    return this.post<{
      otp_required?: boolean; challenge_id?: string;
      token?: string; role?: string; email?: string;
    }>("/api/auth/login", { email, password });
  }

  verifyOtp(challengeId: string, code: string) {
    return this.post<{ token: string; role: string; email: string }>(
      "/api/auth/otp/verify", { challenge_id: challengeId, code });
  }

  federated(assertion: Record<string, unknown>) {
    // the assertion's payload+signature travel at the top level
    return this.post<{ token: string; role: string; email: string }>(
      "/api/auth/federated", assertion);
  }

  logout() {
    return this.post<{ logged_out: boolean }>("/api/auth/logout");
  }

  // -- storefront --------------------------------------------------------------

  products(category?: string) {
    const q = category ? `?category=${encodeURIComponent(category)}` : "";
    return this.get<{ products: Product[] }>(`/api/products${q}`);
  }

  search(q: string) {
    return this.get<{ products: Product[] }>(
      `/api/products/search?q=${encodeURIComponent(q)}`);
  }

  product(id: string) {
    return this.get<Product>(`/api/products/${id}`);
  }

  categories() {
    return this.get<{ categories: Category[] }>("/api/categories");
  }

  cart() {
    return this.get<Cart>("/api/cart");
  }

  cartAdd(productId: string, qty: number) {
    return this.post<Cart>("/api/cart/items", { product_id: productId, qty });
  }

  cartSet(productId: string, qty: number) {
    return this.put<Cart>(`/api/cart/items/${productId}`, { qty });
  }

  cartRemove(productId: string) {
    return this.del<Cart>(`/api/cart/items/${productId}`);
  }

  checkout() {
    return this.post<Order>("/api/checkout");
  }

  orders() {
    return this.get<{ orders: Order[] }>("/api/orders");
  }

  order(id: string) {
    return this.get<Order>(`/api/orders/${id}`);
  }

  cancelOrder(id: string) {
    return this.post<Order>(`/api/orders/${id}/cancel`);
  }

  // -- payments ---------------------------------------------------------------

  enrollClientKey(keyB64: string) {
    return this.post<{ key_id: string }>("/api/payments/client-key", { key: keyB64 });
  }

  createIntent(orderId: string, amount: number, method: string, idempotencyKey: string) {
    return this.post<Intent>("/api/payments/intent", {
      order_id: orderId, amount, method, idempotency_key: idempotencyKey,
    });
  }

  paymentOtp() {
    return this.post<{ challenge_id: string; expires_at: number }>("/api/payments/otp");
  }

  submitCard(intentId: string, envelope: Record<string, unknown>,
             challengeId?: string, code?: string) {
    const body: Record<string, unknown> = { intent_id: intentId, envelope };
    if (challengeId !== undefined) {
      body.challenge_id = challengeId;
      body.code = code;
    }
    return this.post<Intent>("/api/payments/submit", body);
  }

  submitWallet(intentId: string, walletToken: string,
               challengeId?: string, code?: string) {
    const body: Record<string, unknown> = { intent_id: intentId, wallet_token: walletToken };
    if (challengeId !== undefined) {
      body.challenge_id = challengeId;
      body.code = code;
    }
    return this.post<Intent>("/api/payments/wallet", body);
  }

  verifyReceipt(receipt: Record<string, unknown>) {
    return this.post<{ valid: boolean }>("/api/payments/receipt/verify", { receipt });
  }

  // -- admin -------------------------------------------------------------------

  adminProducts() {
    return this.get<{ products: Product[] }>("/admin/products");
  }

  adminCreateProduct(fields: Record<string, unknown>) {
    return this.post<Product>("/admin/products", fields);
  }

  adminUpdateProduct(id: string, fields: Record<string, unknown>) {
    return this.put<Product>(`/admin/products/${id}`, fields);
  }

  adminDeleteProduct(id: string) {
    return this.del<{ deleted: string }>(`/admin/products/${id}`);
  }

  adminCategories() {
    return this.get<{ categories: Category[] }>("/admin/categories");
  }

  adminCreateCategory(name: string) {
    return this.post<Category>("/admin/categories", { name });
  }

  adminOrders() {
    return this.get<{ orders: Order[] }>("/admin/orders");
  }

  adminOrderStatus(id: string, status: string) {
    return this.post<Order>(`/admin/orders/${id}/status`, { status });
  }

  securityReport() {
    return this.get<SecurityReport>("/admin/security/report");
  }

  // -- sandbox diagnostics -------------------------------------------------------

  devOutbox() {
    return this.get<{ entries: OutboxEntry[] }>("/dev/otp-outbox");
  }

  devWalletToken(amount: number) {
    return this.post<{ token: string; amount: number }>("/dev/wallet/tokens", { amount });
  }

  devFederatedAssertion(subject: string, email: string) {
    return this.post<Record<string, unknown>>("/dev/federated/assertion", { subject, email });
  }
}
