import openai

client = openai.OpenAI()
response = client.chat.completions.create(
    model="gpt-4",
    temperature=0,
    messages=[{"role": "user", "content": "Hi"}],
)
