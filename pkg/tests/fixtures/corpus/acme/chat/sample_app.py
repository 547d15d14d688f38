import openai

sea_prompt = "Write a poem about the sea."
response = openai.Completion.create(
    model="text-davinci-003",
    prompt=sea_prompt,
    max_tokens=100,
)
print(response)
